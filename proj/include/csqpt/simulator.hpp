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

#ifndef CSQPT_SIMULATOR_HPP
#define CSQPT_SIMULATOR_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "csqpt/histogram.hpp"
#include "csqpt/process.hpp"

// Synthetic homodyne data: marginal quadrature distributions of process
// outputs, seeded Monte Carlo sampling (inverse CDF), and analytic bin
// weights for noise-free studies.

namespace csqpt {

class SimulationError : public std::runtime_error {
public:
  explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

struct ProbeSpec {
  Complex alpha;
  int label = 0;
};

enum class PhaseKind { UniformRandom, EvenlySpaced };

struct PhaseDistribution {
  PhaseKind kind = PhaseKind::UniformRandom;
  int count = 0;        // number of evenly spaced phases (EvenlySpaced only)
  double offset = 0.0;  // first phase (EvenlySpaced only)

  static PhaseDistribution uniform() { return {PhaseKind::UniformRandom, 0, 0.0}; }
  static PhaseDistribution spaced(int count, double offset = 0.0) {
    return {PhaseKind::EvenlySpaced, count, offset};
  }
};

struct HomodyneRecord {
  double theta = 0.0;
  double x = 0.0;
};

struct HomodyneDataset {
  int schema_version = 1;
  std::uint64_t seed = 0;
  double eta = 1.0;
  PhaseDistribution phase;
  std::vector<ProbeSpec> probes;
  std::vector<double> g;              // success fraction per probe
  std::vector<double> trace_deficit;  // coherent truncation deficit per probe
  std::vector<std::vector<HomodyneRecord>> records;
};

// Inverse-CDF sampling grid.  The x range is wider than the default binning
// range so the sampled tails are not clipped.
struct SampleGrid {
  double x_lo = -8.0;
  double x_hi = 8.0;
  int n_points = 4001;
  int n_theta_tables = 1024;  // CDF tables per phase period for random phases
};

// ---------------------------------------------------------------------------
// Deterministic RNG helpers.  The standard distributions are
// implementation-defined, so raw draws are mapped to doubles by hand to keep
// datasets reproducible byte for byte.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // decorrelate nearby seeds
    for (int i = 0; i < 4; ++i) (void)splitmix64(state_);
  }

  // derive an independent stream, e.g. one per probe or restart
  Rng stream(std::uint64_t index) const {
    std::uint64_t s = state_ ^ (0x5851f42d4c957f2dULL * (index + 1));
    return Rng(s);
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // standard normal via Box-Muller; one spare kept
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Marginal distributions
// ---------------------------------------------------------------------------

inline Matrix probe_density(const ProbeSpec& probe, int dim) {
  const FockVector state = coherent_vector(probe.alpha, dim);
  return state.amplitudes * state.amplitudes.adjoint();
}

// Physical output state of a process for a coherent probe; for heralded
// tensors the fail row is dropped.  Trace equals the success probability
// (up to truncation).
inline Matrix output_state(const ProcessTensor& e, const ProbeSpec& probe) {
  const Matrix out = csqpt::apply(e, probe_density(probe, e.dim_in));
  const int d = e.physical_dim_out();
  return out.topLeftCorner(d, d);
}

// p(x) = Tr[E rho^T (x) Pi(theta, x)] = <theta,x| E(rho) |theta,x> on a grid.
// Integrates to one for deterministic processes and to the success
// probability for heralded ones.
inline std::vector<double> marginal_pdf(const ProcessTensor& e, const ProbeSpec& probe,
                                        double theta, std::span<const double> xs) {
  const Matrix sigma = output_state(e, probe);
  const int dim = static_cast<int>(sigma.rows());
  std::vector<double> pdf(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Vector v = quad_overlap_vector(dim, theta, xs[i]);
    const double p = (v.adjoint() * sigma * v).value().real();
    pdf[i] = p > 0.0 ? p : 0.0;
  }
  return pdf;
}

#ifndef CSQPT_DOXYGEN_INTERNAL
namespace detail {

// Marginal of a fixed output state on a fixed x grid, for many phases.
// Exploits p(x|theta) = c_0(x) + 2 Re sum_{d>0} e^{i d theta} c_d(x) with
// c_d(x) = sum_j psi_j(x) psi_{j+d}(x) sigma_{j, j+d}: one O(dim^2) pass per
// grid point, then O(dim) per (theta, x) evaluation.
class MarginalTable {
public:
  MarginalTable(const Matrix& sigma, std::span<const double> xs) {
    dim_ = static_cast<int>(sigma.rows());
    nx_ = static_cast<int>(xs.size());
    coeff_.resize(dim_);
    for (int d = 0; d < dim_; ++d) coeff_[d].resize(nx_);
    for (int i = 0; i < nx_; ++i) {
      const RealVector psi = fock_wavefunctions(dim_, xs[i]);
      for (int d = 0; d < dim_; ++d) {
        Complex acc = 0.0;
        for (int j = 0; j + d < dim_; ++j) acc += psi[j] * psi[j + d] * sigma(j, j + d);
        coeff_[d][i] = acc;
      }
    }
  }

  double value(double theta, int ix) const {
    double p = coeff_[0][ix].real();
    Complex phase(1.0, 0.0);
    const Complex rot = std::polar(1.0, theta);
    for (int d = 1; d < dim_; ++d) {
      phase *= rot;
      p += 2.0 * (phase * coeff_[d][ix]).real();
    }
    return p > 0.0 ? p : 0.0;
  }

  void fill_row(double theta, std::vector<double>& out) const {
    out.resize(nx_);
    for (int i = 0; i < nx_; ++i) out[i] = value(theta, i);
  }

private:
  int dim_ = 0;
  int nx_ = 0;
  std::vector<std::vector<Complex>> coeff_;  // coeff_[d][ix] = c_d(x_ix)
};

// Piecewise-linear CDF on a uniform grid with inverse lookup.
struct CdfTable {
  double x_lo = 0.0, dx = 0.0;
  std::vector<double> cum;  // cum[0] = 0, cum[n-1] = total mass

  double total() const { return cum.back(); }

  double invert(double u) const {
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    std::size_t hi = static_cast<std::size_t>(it - cum.begin());
    if (hi == 0) hi = 1;
    if (hi >= cum.size()) hi = cum.size() - 1;
    const double lo_mass = cum[hi - 1];
    const double cell = cum[hi] - lo_mass;
    const double frac = cell > 0.0 ? (u - lo_mass) / cell : 0.5;
    return x_lo + dx * (static_cast<double>(hi - 1) + frac);
  }
};

inline CdfTable build_cdf(const std::vector<double>& pdf, double x_lo, double dx) {
  CdfTable cdf;
  cdf.x_lo = x_lo;
  cdf.dx = dx;
  cdf.cum.resize(pdf.size());
  cdf.cum[0] = 0.0;
  for (std::size_t i = 1; i < pdf.size(); ++i)
    cdf.cum[i] = cdf.cum[i - 1] + 0.5 * (pdf[i - 1] + pdf[i]) * dx;
  return cdf;
}

}  // namespace detail
#endif

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

// Draws n_samples (theta, x) records from the output of `e` for one probe.
// Detector loss is applied to the output state before sampling.  Phases
// follow `phase`; x is drawn by inverting the per-phase quadrature CDF on
// a fine grid.  For continuously random phases the CDF is tabulated on a
// dense phase grid and records interpolate between neighbouring quantile
// functions; the marginal is a trigonometric polynomial of low degree in
// theta, so the grid resolves it far below statistical resolution.
// Deterministic given the seed.
inline std::vector<HomodyneRecord> sample_probe(const ProcessTensor& e, const ProbeSpec& probe,
                                                std::int64_t n_samples, LossModel loss,
                                                std::uint64_t seed,
                                                PhaseDistribution phase = PhaseDistribution::uniform(),
                                                SampleGrid grid = SampleGrid{}) {
  if (n_samples < 1) throw ConfigError("sample_probe: n_samples must be >= 1");
  loss.validate();
  const Matrix sigma = apply_loss(output_state(e, probe), loss);

  std::vector<double> xs(grid.n_points);
  const double dx = (grid.x_hi - grid.x_lo) / (grid.n_points - 1);
  for (int i = 0; i < grid.n_points; ++i) xs[i] = grid.x_lo + i * dx;
  const detail::MarginalTable table(sigma, xs);

  Rng rng(seed);
  std::vector<HomodyneRecord> records(static_cast<std::size_t>(n_samples));
  std::vector<double> row;

  auto cdf_at = [&](double theta) {
    table.fill_row(theta, row);
    detail::CdfTable cdf = detail::build_cdf(row, grid.x_lo, dx);
    if (!(cdf.total() > 1e-300))
      throw SimulationError("sample_probe: degenerate (all-zero) marginal distribution");
    return cdf;
  };

  if (phase.kind == PhaseKind::EvenlySpaced) {
    if (phase.count < 1) throw ConfigError("sample_probe: evenly spaced phases need count >= 1");
    std::vector<detail::CdfTable> cdfs(phase.count);
    for (int k = 0; k < phase.count; ++k)
      cdfs[k] = cdf_at(phase.offset + k * 2.0 * M_PI / phase.count);
    for (std::int64_t i = 0; i < n_samples; ++i) {
      const int k = static_cast<int>(i % phase.count);
      const double theta = phase.offset + k * 2.0 * M_PI / phase.count;
      const double u = rng.uniform() * cdfs[k].total();
      records[static_cast<std::size_t>(i)] = {theta, cdfs[k].invert(u)};
    }
    return records;
  }

  // random phases: quantile tables on a cyclic phase grid
  const int nt = grid.n_theta_tables;
  std::vector<detail::CdfTable> cdfs(nt);
  for (int k = 0; k < nt; ++k) cdfs[k] = cdf_at(k * 2.0 * M_PI / nt);
  for (std::int64_t i = 0; i < n_samples; ++i) {
    const double theta = rng.uniform() * 2.0 * M_PI;
    const double pos = theta / (2.0 * M_PI) * nt;
    const int k0 = static_cast<int>(pos) % nt;
    const int k1 = (k0 + 1) % nt;
    const double t = pos - std::floor(pos);
    const double u = rng.uniform();
    const double x0 = cdfs[k0].invert(u * cdfs[k0].total());
    const double x1 = cdfs[k1].invert(u * cdfs[k1].total());
    records[static_cast<std::size_t>(i)] = {theta, (1.0 - t) * x0 + t * x1};
  }
  return records;
}

// ---------------------------------------------------------------------------
// Dataset generation
// ---------------------------------------------------------------------------

// Evenly spaced probe amplitudes 0 .. alpha_max on the positive real axis.
inline std::vector<ProbeSpec> probe_grid(double alpha_max, int count) {
  if (count < 1) throw ConfigError("probe_grid: count must be >= 1");
  std::vector<ProbeSpec> probes(count);
  for (int m = 0; m < count; ++m) {
    const double a = count == 1 ? alpha_max : alpha_max * m / (count - 1);
    probes[m] = {Complex(a, 0.0), m};
  }
  return probes;
}

// Success fraction of a probabilistic model for probe alpha.  Photon
// creation fires with probability g^2 (1 + |alpha|^2); deterministic models
// always succeed.
inline double success_fraction(const ProcessModel& model, Complex alpha) {
  if (model.kind == ProcessModel::Kind::PhotonCreation)
    return model.param * (1.0 + std::norm(alpha));
  return 1.0;
}

// Simulates the full multi-probe experiment: exactly n_per_probe successful
// records per probe, with the success fraction recorded alongside.
// Bit-for-bit reproducible from the seed.
inline HomodyneDataset simulate_dataset(const ProcessModel& model,
                                        const std::vector<ProbeSpec>& probes,
                                        std::int64_t n_per_probe, LossModel loss,
                                        std::uint64_t seed, int dim,
                                        PhaseDistribution phase = PhaseDistribution::uniform(),
                                        SampleGrid grid = SampleGrid{}) {
  if (probes.empty()) throw ConfigError("simulate_dataset: probe list is empty");
  model.validate();
  loss.validate();
  const ProcessTensor e = reference_tensor(model, dim, dim);

  HomodyneDataset ds;
  ds.seed = seed;
  ds.eta = loss.eta;
  ds.phase = phase;
  ds.probes = probes;
  ds.g.resize(probes.size());
  ds.trace_deficit.resize(probes.size());
  ds.records.resize(probes.size());

  for (std::size_t m = 0; m < probes.size(); ++m) {
    const double g = success_fraction(model, probes[m].alpha);
    if (g >= 1.0 && !model.deterministic())
      throw ConfigError("simulate_dataset: success fraction >= 1 for probe " +
                        std::to_string(m) + "; reduce g^2 or the probe amplitude");
    ds.g[m] = g;
    ds.trace_deficit[m] = coherent_vector(probes[m].alpha, dim).trace_deficit;
    Rng stream = Rng(seed).stream(m);
    ds.records[m] = sample_probe(e, probes[m], n_per_probe, loss, stream.next_u64(), phase, grid);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Binning and analytic bin weights
// ---------------------------------------------------------------------------

inline QuadratureHistogram bin(const HomodyneDataset& ds, const BinGrid& grid) {
  grid.validate();
  QuadratureHistogram h;
  h.grid = grid;
  h.eta = ds.eta;
  h.g = ds.g;
  h.trace_deficit = ds.trace_deficit;
  h.probe_alphas.reserve(ds.probes.size());
  for (const auto& p : ds.probes) h.probe_alphas.push_back(p.alpha);
  h.counts.resize(ds.probes.size());
  h.total.assign(ds.probes.size(), 0.0);
  h.dropped.assign(ds.probes.size(), 0);

  const double two_pi = 2.0 * M_PI;
  for (std::size_t m = 0; m < ds.records.size(); ++m) {
    for (const auto& rec : ds.records[m]) {
      double theta = std::fmod(rec.theta, two_pi);
      if (theta < 0.0) theta += two_pi;
      int u = static_cast<int>(theta / grid.dtheta);
      if (u >= grid.n_theta()) u = grid.n_theta() - 1;
      if (rec.x < grid.x_min || rec.x >= grid.x_max) {
        ++h.dropped[m];
        continue;
      }
      const int v = static_cast<int>((rec.x - grid.x_min) / grid.dx());
      h.counts[m][{u, v}] += 1.0;
      h.total[m] += 1.0;
    }
  }
  return h;
}

inline QuadratureHistogram bin(const HomodyneDataset& ds, double dtheta, double dx,
                               double x_min = -6.0, double x_max = 6.0) {
  if (!(dtheta > 0.0) || !(dx > 0.0)) throw ConfigError("bin: widths must be positive");
  BinGrid grid;
  grid.dtheta = dtheta;
  grid.x_min = x_min;
  grid.x_max = x_max;
  grid.n_x = std::max(1, static_cast<int>(std::lround((x_max - x_min) / dx)));
  return bin(ds, grid);
}

// Noise-free surrogate for a sampled histogram: every bin carries the weight
//   h_{m;u,v} = n_per_probe * (dtheta / 2 pi) * dx * p(x_v | theta_u, success),
// the marginal evaluated at the bin center.  The conditioning on success
// makes the weights sum to n_per_probe, matching a heralded sample stream.
// Requires a phase width that divides 2 pi, so all bins carry equal measure.
inline QuadratureHistogram exact_histogram(const ProcessModel& model,
                                           const std::vector<ProbeSpec>& probes,
                                           double n_per_probe, LossModel loss, int dim,
                                           const BinGrid& grid) {
  grid.validate();
  model.validate();
  loss.validate();
  const double ratio = 2.0 * M_PI / grid.dtheta;
  if (std::abs(ratio - std::lround(ratio)) > 1e-9)
    throw ConfigError("exact_histogram: dtheta must divide 2 pi");
  const ProcessTensor e = reference_tensor(model, dim, dim);

  QuadratureHistogram h;
  h.grid = grid;
  h.eta = loss.eta;
  h.counts.resize(probes.size());
  h.total.assign(probes.size(), 0.0);
  h.dropped.assign(probes.size(), 0);

  std::vector<double> xs(grid.n_x);
  for (int v = 0; v < grid.n_x; ++v) xs[v] = grid.x_center(v);

  for (std::size_t m = 0; m < probes.size(); ++m) {
    h.probe_alphas.push_back(probes[m].alpha);
    h.trace_deficit.push_back(coherent_vector(probes[m].alpha, dim).trace_deficit);
    const Matrix sigma_ideal = output_state(e, probes[m]);
    const double success = sigma_ideal.trace().real();
    if (!(success > 1e-12))
      throw SimulationError("exact_histogram: process never fires for probe " +
                            std::to_string(m));
    h.g.push_back(model.deterministic() ? 1.0 : success);
    const Matrix sigma = apply_loss(sigma_ideal, loss);
    const detail::MarginalTable table(sigma, xs);
    const double cell = n_per_probe * grid.dtheta / (2.0 * M_PI) * grid.dx() / success;
    for (int u = 0; u < grid.n_theta(); ++u) {
      const double theta = grid.theta_center(u);
      for (int v = 0; v < grid.n_x; ++v) {
        const double w = cell * table.value(theta, v);
        if (w > 0.0) {
          h.counts[m][{u, v}] = w;
          h.total[m] += w;
        }
      }
    }
  }
  return h;
}

}  // namespace csqpt

#endif  // CSQPT_SIMULATOR_HPP
