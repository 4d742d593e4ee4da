// Copyright 2026 The csqpt authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <numeric>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "csqpt/io.hpp"
#include "csqpt/simulator.hpp"
#include "helpers.hpp"

using namespace csqpt;
using csqpt::testing::ks_statistic;
using csqpt::testing::trapezoid;

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = lo + (hi - lo) * i / (n - 1);
  return xs;
}

// analytic CDF of the marginal on a fine grid, by cumulative trapezoid
std::pair<std::vector<double>, std::vector<double>> marginal_cdf(const ProcessTensor& e,
                                                                 const ProbeSpec& probe,
                                                                 double theta, double eta = 1.0) {
  const auto xs = linspace(-8.0, 8.0, 6001);
  Matrix sigma = output_state(e, probe);
  if (eta < 1.0) sigma = apply_loss(sigma, LossModel{eta});
  std::vector<double> pdf(xs.size());
  const int dim = static_cast<int>(sigma.rows());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Vector v = quad_overlap_vector(dim, theta, xs[i]);
    pdf[i] = std::max(0.0, (v.adjoint() * sigma * v).value().real());
  }
  std::vector<double> cdf(xs.size(), 0.0);
  for (std::size_t i = 1; i < xs.size(); ++i)
    cdf[i] = cdf[i - 1] + 0.5 * (pdf[i - 1] + pdf[i]) * (xs[i] - xs[i - 1]);
  const double total = cdf.back();
  for (auto& c : cdf) c /= total;
  return {xs, cdf};
}

std::vector<double> xs_of(const std::vector<HomodyneRecord>& records) {
  std::vector<double> xs(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) xs[i] = records[i].x;
  return xs;
}

}  // namespace

TEST_CASE("marginal distribution values", "[simulator]") {
  SECTION("vacuum density at the origin") {
    const ProcessTensor e = reference_tensor(ProcessModel::identity(), 6, 6);
    const double xs[] = {0.0};
    const auto pdf = marginal_pdf(e, {Complex(0.0, 0.0), 0}, 1.1, xs);
    CHECK(pdf[0] == Catch::Approx(1.0 / std::sqrt(M_PI)));
    CHECK(pdf[0] == Catch::Approx(0.5642).margin(1e-4));
  }
  SECTION("normalization and mean of a bright probe") {
    const ProcessTensor e = reference_tensor(ProcessModel::identity(), 16, 16);
    const auto xs = linspace(-8.0, 8.0, 4001);
    const auto pdf = marginal_pdf(e, {Complex(0.9375, 0.0), 0}, 0.0, xs);
    double mass = 0.0, mean = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
      const double w = 0.5 * (pdf[i] + pdf[i - 1]) * (xs[i] - xs[i - 1]);
      mass += w;
      mean += w * 0.5 * (xs[i] + xs[i - 1]);
    }
    CHECK(mass == Catch::Approx(1.0).margin(1e-4));
    CHECK(mean / mass == Catch::Approx(std::sqrt(2.0) * 0.9375).margin(1e-3));
  }
  SECTION("heralded marginal integrates to the success probability") {
    const ProcessTensor e = reference_tensor(ProcessModel::photon_creation(0.1), 8, 8);
    const auto xs = linspace(-8.0, 8.0, 4001);
    const auto pdf = marginal_pdf(e, {Complex(0.0, 0.0), 0}, 0.7, xs);
    const double mass = std::accumulate(pdf.begin(), pdf.end(), 0.0) * (16.0 / 4000.0) -
                        0.5 * (pdf.front() + pdf.back()) * (16.0 / 4000.0);
    CHECK(mass == Catch::Approx(0.1).margin(1e-4));
  }
  SECTION("nonnegative everywhere for every built-in") {
    const auto xs = linspace(-6.0, 6.0, 501);
    for (const auto& model : {ProcessModel::identity(), ProcessModel::attenuation(0.9),
                              ProcessModel::photon_creation(0.1)}) {
      const ProcessTensor e = reference_tensor(model, 8, 8);
      const auto pdf = marginal_pdf(e, {Complex(0.625, 0.0), 0}, 2.1, xs);
      for (double p : pdf) CHECK(p >= 0.0);
    }
  }
  SECTION("phase covariance") {
    const auto xs = linspace(-6.0, 6.0, 201);
    for (const auto& model : {ProcessModel::identity(), ProcessModel::photon_creation(0.1)}) {
      const ProcessTensor e = reference_tensor(model, 10, 10);
      const double phi = 0.9, theta = 2.3;
      const auto lhs =
          marginal_pdf(e, {std::polar(0.625, phi), 0}, theta, xs);
      const auto rhs = marginal_pdf(e, {Complex(0.625, 0.0), 0}, theta - phi, xs);
      for (std::size_t i = 0; i < xs.size(); ++i)
        CHECK(lhs[i] == Catch::Approx(rhs[i]).margin(1e-9));
    }
  }
}

TEST_CASE("sampling statistics", "[simulator]") {
  const ProcessTensor id = reference_tensor(ProcessModel::identity(), 8, 8);
  SECTION("vacuum quadrature variance is one half") {
    for (double eta : {1.0, 0.55}) {
      const auto records =
          sample_probe(id, {Complex(0.0, 0.0), 0}, 100000, LossModel{eta}, 421);
      double mean = 0.0, var = 0.0;
      for (const auto& rec : records) mean += rec.x;
      mean /= records.size();
      for (const auto& rec : records) var += (rec.x - mean) * (rec.x - mean);
      var /= records.size();
      CHECK(var == Catch::Approx(0.5).margin(0.01));
    }
  }
  SECTION("Kolmogorov-Smirnov against the analytic CDF at a fixed phase") {
    const ProbeSpec probe{Complex(0.625, 0.0), 0};
    const double theta = 1.0;
    const auto records = sample_probe(id, probe, 100000, LossModel{1.0}, 77,
                                      PhaseDistribution::spaced(1, theta));
    const auto [grid, cdf] = marginal_cdf(id, probe, theta);
    CHECK(ks_statistic(xs_of(records), grid, cdf) <= 0.01);
  }
  SECTION("random-phase records follow the x-marginal (chi-squared)") {
    const ProbeSpec probe{Complex(0.625, 0.0), 0};
    const auto records = sample_probe(id, probe, 100000, LossModel{1.0}, 99);
    // expected bin masses: average the marginal over theta by quadrature
    const int n_bins = 50;
    const double lo = -4.0, hi = 4.0, width = (hi - lo) / n_bins;
    std::vector<double> expected(n_bins, 0.0);
    const int n_theta = 64;
    const auto xs = linspace(lo + width / 2, hi - width / 2, n_bins);
    for (int t = 0; t < n_theta; ++t) {
      const auto pdf = marginal_pdf(id, probe, (t + 0.5) * 2.0 * M_PI / n_theta, xs);
      for (int b = 0; b < n_bins; ++b) expected[b] += pdf[b] * width / n_theta;
    }
    std::vector<double> observed(n_bins, 0.0);
    double n_in = 0.0;
    for (const auto& rec : records) {
      const int b = static_cast<int>((rec.x - lo) / width);
      if (b >= 0 && b < n_bins) {
        observed[b] += 1.0;
        n_in += 1.0;
      }
    }
    const double total_expected = std::accumulate(expected.begin(), expected.end(), 0.0);
    double chi2 = 0.0;
    for (int b = 0; b < n_bins; ++b) {
      const double e_b = n_in * expected[b] / total_expected;
      if (e_b > 5.0) chi2 += (observed[b] - e_b) * (observed[b] - e_b) / e_b;
    }
    CHECK(chi2 < 85.351);  // chi-squared 0.999 quantile at 49 dof
  }
  SECTION("detector loss commutes with the corrected-POVM model") {
    // samples drawn through apply_loss against the CDF of Tr[sigma Pi_eta]
    const ProbeSpec probe{Complex(0.625, 0.0), 0};
    const double theta = 0.6, eta = 0.75;
    const auto records = sample_probe(id, probe, 100000, LossModel{eta}, 1234,
                                      PhaseDistribution::spaced(1, theta));
    const auto xs = linspace(-8.0, 8.0, 6001);
    const Matrix sigma = output_state(id, probe);
    std::vector<double> cdf(xs.size(), 0.0);
    std::vector<double> pdf(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const Matrix pov = lossy_projector(theta, xs[i], LossModel{eta}, 8);
      pdf[i] = std::max(0.0, (pov * sigma).trace().real());
    }
    for (std::size_t i = 1; i < xs.size(); ++i)
      cdf[i] = cdf[i - 1] + 0.5 * (pdf[i] + pdf[i - 1]) * (xs[i] - xs[i - 1]);
    for (auto& c : cdf) c /= cdf.back();
    CHECK(ks_statistic(xs_of(records), xs, cdf) <= 0.01);
  }
  SECTION("degenerate marginal is reported") {
    ProcessTensor dead = uniform_tensor(2, 3, true);
    dead.op.setZero();
    dead.op(dead.flat(0, 2), dead.flat(0, 2)) = 1.0;  // all weight on the fail state
    dead.op(dead.flat(1, 2), dead.flat(1, 2)) = 1.0;
    CHECK_THROWS_AS(sample_probe(dead, {Complex(0.3, 0.0), 0}, 10, LossModel{1.0}, 3),
                    SimulationError);
  }
}

TEST_CASE("dataset simulation", "[simulator]") {
  SECTION("reference configuration shape and success fractions") {
    const auto probes = probe_grid(0.9375, 4);
    REQUIRE(probes.size() == 4);
    CHECK(probes[1].alpha.real() == Catch::Approx(0.3125));
    CHECK(probes[2].alpha.real() == Catch::Approx(0.625));
    const HomodyneDataset ds = simulate_dataset(ProcessModel::photon_creation(0.1), probes, 500,
                                                LossModel{1.0}, 5, 12);
    for (const auto& records : ds.records) CHECK(records.size() == 500);
    CHECK(ds.g[0] == Catch::Approx(0.1));
    CHECK(ds.g[3] == Catch::Approx(0.1 * (1.0 + 0.9375 * 0.9375)));
    CHECK(ds.g[3] == Catch::Approx(0.1879).margin(1e-4));
  }
  SECTION("success fractions at or above one are rejected") {
    CHECK_THROWS_AS(simulate_dataset(ProcessModel::photon_creation(0.6), probe_grid(0.9375, 4),
                                     100, LossModel{1.0}, 5, 12),
                    ConfigError);
  }
  SECTION("same seed reproduces the dataset byte for byte") {
    const auto probes = probe_grid(0.6, 2);
    const HomodyneDataset a =
        simulate_dataset(ProcessModel::identity(), probes, 400, LossModel{0.75}, 99, 8);
    const HomodyneDataset b =
        simulate_dataset(ProcessModel::identity(), probes, 400, LossModel{0.75}, 99, 8);
    std::ostringstream sa, sb;
    write_dataset(sa, a);
    write_dataset(sb, b);
    CHECK(sa.str() == sb.str());
    const HomodyneDataset c =
        simulate_dataset(ProcessModel::identity(), probes, 400, LossModel{0.75}, 100, 8);
    std::ostringstream sc;
    write_dataset(sc, c);
    CHECK(sa.str() != sc.str());
  }
}

TEST_CASE("analytic bin weights", "[simulator]") {
  const auto probes = probe_grid(0.6, 3);
  SECTION("weights sum to the nominal count") {
    const QuadratureHistogram h = exact_histogram(ProcessModel::identity(), probes, 1000.0,
                                                  LossModel{1.0}, 8, BinGrid{});
    for (int m = 0; m < h.num_probes(); ++m)
      CHECK(h.total[m] == Catch::Approx(1000.0).margin(0.5));
  }
  SECTION("heralded weights are conditioned on success") {
    const QuadratureHistogram h = exact_histogram(ProcessModel::photon_creation(0.1), probes,
                                                  1000.0, LossModel{1.0}, 8, BinGrid{});
    for (int m = 0; m < h.num_probes(); ++m) {
      CHECK(h.g[m] < 1.0);
      CHECK(h.total[m] == Catch::Approx(1000.0).margin(0.5));
    }
  }
  SECTION("phase width must divide the full circle") {
    BinGrid grid;
    grid.dtheta = 0.33;
    CHECK_THROWS_AS(
        exact_histogram(ProcessModel::identity(), probes, 10.0, LossModel{1.0}, 6, grid),
        ConfigError);
  }
}

TEST_CASE("record binning", "[simulator]") {
  SECTION("single record lands at its bin center") {
    HomodyneDataset ds;
    ds.probes = {{Complex(0.0, 0.0), 0}};
    ds.g = {1.0};
    ds.trace_deficit = {0.0};
    ds.records = {{{0.1, 0.2}}};
    const QuadratureHistogram h = bin(ds, 0.2, 0.4);
    REQUIRE(h.counts[0].size() == 1);
    const auto& [key, count] = *h.counts[0].begin();
    CHECK(count == 1.0);
    CHECK(h.grid.theta_center(key.first) == Catch::Approx(0.1));
    CHECK(h.grid.x_center(key.second) == Catch::Approx(0.2));
  }
  SECTION("counts are conserved") {
    Rng rng(7);
    HomodyneDataset ds;
    ds.probes = {{Complex(0.3, 0.0), 0}, {Complex(0.5, 0.0), 1}};
    ds.g = {1.0, 1.0};
    ds.trace_deficit = {0.0, 0.0};
    ds.records.resize(2);
    for (int m = 0; m < 2; ++m)
      for (int i = 0; i < 1000; ++i)
        ds.records[m].push_back({rng.uniform() * 2.0 * M_PI, 14.0 * rng.uniform() - 7.0});
    const QuadratureHistogram h = bin(ds, BinGrid{});
    for (int m = 0; m < 2; ++m) {
      double total = 0.0;
      for (const auto& [key, count] : h.counts[m]) total += count;
      CHECK(total + h.dropped[m] == 1000.0);
      CHECK(total == h.total[m]);
      CHECK(h.dropped[m] > 0);  // the x range [-6, 6) clips the uniform draw
    }
  }
}
