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

#ifndef CSQPT_METRICS_HPP
#define CSQPT_METRICS_HPP

#include <future>
#include <vector>

#include "csqpt/mle.hpp"
#include "csqpt/process.hpp"

// Quantitative comparison of processes: Uhlmann fidelity of outputs,
// worst-case fidelity over an input subspace found by stochastic descent,
// and the diagonal tables used for the bar-chart comparisons.

namespace csqpt {

// Uhlmann fidelity F = Tr sqrt( sqrt(rho) sigma sqrt(rho) ).  Both inputs
// are normalized to unit trace first; identically zero inputs are rejected.
inline double uhlmann_fidelity(const Matrix& rho, const Matrix& sigma) {
  const double tr = rho.trace().real();
  const double ts = sigma.trace().real();
  if (!(tr > 1e-12) || !(ts > 1e-12))
    throw ConfigError("uhlmann_fidelity: zero-trace input state");
  const Matrix a = psd_sqrt(hermitize(rho) / tr);
  const Matrix inner = a * (hermitize(sigma) / ts) * a;
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(inner), Eigen::EigenvaluesOnly);
  double f = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const double v = es.eigenvalues()[i];
    if (v > 0.0) f += std::sqrt(v);
  }
  return f;
}

struct WorstCaseConfig {
  int n_input_max = -1;      // input cutoff; negative means dim_in - 2
  int walk_steps = 20000;
  double step_sigma = 0.02;
  int restarts = 5;
  std::uint64_t seed = 20240;
  int threads = 1;

  void validate() const {
    if (walk_steps < 1) throw ConfigError("WorstCaseConfig: walk_steps must be >= 1");
    if (!(step_sigma > 0.0)) throw ConfigError("WorstCaseConfig: step_sigma must be positive");
    if (restarts < 1) throw ConfigError("WorstCaseConfig: restarts must be >= 1");
  }
};

struct WorstCaseResult {
  double fidelity = 1.0;
  Matrix rho_min;                // minimizing input state (full input dimension)
  std::vector<double> accepted;  // fidelity after each accepted move, best restart
};

#ifndef CSQPT_DOXYGEN_INTERNAL
namespace detail {

// Cached channel action: vec(rho_out) = transfer * vec(rho_in).
struct ChannelAction {
  int dim_in = 0;
  int dim_out = 0;
  Matrix transfer;

  explicit ChannelAction(const ProcessTensor& e_arg) {
    const ProcessTensor e = e_arg.heralded ? strip_heralding(e_arg) : e_arg;
    dim_in = e.dim_in;
    dim_out = e.dim_out;
    transfer = transfer_matrix(e);
  }

  Matrix operator()(const Matrix& rho) const {
    const Eigen::Map<const Vector> in(rho.data(), rho.size());
    Vector out_vec = transfer * in;
    return Eigen::Map<const Matrix>(out_vec.data(), dim_out, dim_out);
  }
};

struct WalkOutcome {
  double fidelity = 1.0;
  Matrix t_best;
  std::vector<double> accepted;
};

// Starting points: the best Fock-state corner of the subspace, the
// maximally mixed state, then random factors.
inline Matrix walk_start(const ChannelAction& truth, const ChannelAction& estimate, int sub_dim,
                         int restart, Rng& rng);

inline WalkOutcome fidelity_walk(const ChannelAction& truth, const ChannelAction& estimate,
                                 int sub_dim, int steps, double sigma, Rng rng, int restart) {
  auto gaussian_matrix = [&](Rng& r) {
    Matrix g(sub_dim, sub_dim);
    for (int i = 0; i < sub_dim; ++i)
      for (int j = 0; j < sub_dim; ++j) g(i, j) = Complex(r.gaussian(), r.gaussian());
    return g;
  };

  const int dim_in = truth.dim_in;
  auto embed = [&](const Matrix& t) {
    Matrix rho = Matrix::Zero(dim_in, dim_in);
    rho.topLeftCorner(sub_dim, sub_dim) = t.adjoint() * t;
    const double tr = rho.trace().real();
    if (!(tr > 1e-12)) return Matrix(Matrix::Zero(0, 0));
    return Matrix(rho / tr);
  };

  auto evaluate = [&](const Matrix& rho, double& f_out) {
    const Matrix out_true = truth(rho);
    const Matrix out_est = estimate(rho);
    if (!(out_true.trace().real() > 1e-12) || !(out_est.trace().real() > 1e-12))
      return false;  // zero outputs are outside the comparison domain
    f_out = uhlmann_fidelity(out_true, out_est);
    return true;
  };

  WalkOutcome best;
  Matrix t_cur = walk_start(truth, estimate, sub_dim, restart, rng);
  double f_cur = 1.0;
  {
    Matrix rho = embed(t_cur);
    if (rho.size() == 0 || !evaluate(rho, f_cur)) {
      t_cur = Matrix::Identity(sub_dim, sub_dim);
      evaluate(embed(t_cur), f_cur);
    }
  }
  best.fidelity = f_cur;
  best.t_best = t_cur;

  // the step scale shrinks towards the end so the walk settles into sharp
  // (e.g. pure-state) minima
  const int stage = std::max(1, steps / 5);
  for (int s = 0; s < steps; ++s) {
    const double scale = sigma * std::pow(0.5, s / stage);
    const Matrix t_prop = t_cur + scale * gaussian_matrix(rng);
    const Matrix rho = embed(t_prop);
    if (rho.size() == 0) continue;
    double f_prop = 0.0;
    if (!evaluate(rho, f_prop)) continue;
    if (f_prop < f_cur) {
      t_cur = t_prop;
      f_cur = f_prop;
      best.accepted.push_back(f_cur);
    }
  }
  best.fidelity = f_cur;
  best.t_best = t_cur;
  return best;
}

inline Matrix walk_start(const ChannelAction& truth, const ChannelAction& estimate, int sub_dim,
                         int restart, Rng& rng) {
  if (restart == 0) {
    // lowest-fidelity Fock state of the subspace
    int best_n = 0;
    double best_f = 2.0;
    for (int n = 0; n < sub_dim; ++n) {
      Matrix rho = Matrix::Zero(truth.dim_in, truth.dim_in);
      rho(n, n) = 1.0;
      const Matrix out_true = truth(rho);
      const Matrix out_est = estimate(rho);
      if (!(out_true.trace().real() > 1e-12) || !(out_est.trace().real() > 1e-12)) continue;
      const double f = uhlmann_fidelity(out_true, out_est);
      if (f < best_f) {
        best_f = f;
        best_n = n;
      }
    }
    Matrix t = 1e-3 * Matrix::Identity(sub_dim, sub_dim);
    t(best_n, best_n) = 1.0;
    return t;
  }
  if (restart == 1) return Matrix::Identity(sub_dim, sub_dim);
  Matrix t = Matrix::Identity(sub_dim, sub_dim);
  for (int i = 0; i < sub_dim; ++i)
    for (int j = 0; j < sub_dim; ++j) t(i, j) += 0.5 * Complex(rng.gaussian(), rng.gaussian());
  return t;
}

}  // namespace detail
#endif

// Minimum output fidelity between two processes over density matrices on
// the input subspace spanned by Fock states 0 .. n_input_max.  States are
// parametrized as T^dag T / Tr(T^dag T); Gaussian perturbations of T are
// accepted whenever the fidelity of the (normalized) outputs decreases.
// Restarts run on independent seeded streams and the minimum wins.
inline WorstCaseResult worst_case_fidelity(const ProcessTensor& e_true,
                                           const ProcessTensor& e_est,
                                           const WorstCaseConfig& cfg) {
  cfg.validate();
  const detail::ChannelAction truth(e_true);
  const detail::ChannelAction estimate(e_est);
  if (truth.dim_in != estimate.dim_in || truth.dim_out != estimate.dim_out)
    throw ConfigError("worst_case_fidelity: tensor dimensions do not match");
  const int sub_dim = (cfg.n_input_max < 0 ? truth.dim_in - 2 : cfg.n_input_max) + 1;
  if (sub_dim < 1 || sub_dim > truth.dim_in)
    throw ConfigError("worst_case_fidelity: input cutoff out of range");

  const Rng base(cfg.seed);
  auto run = [&](int restart) {
    return detail::fidelity_walk(truth, estimate, sub_dim, cfg.walk_steps, cfg.step_sigma,
                                 base.stream(static_cast<std::uint64_t>(restart)), restart);
  };

  std::vector<detail::WalkOutcome> outcomes(cfg.restarts);
  if (cfg.threads > 1 && cfg.restarts > 1) {
    std::vector<std::future<detail::WalkOutcome>> futures;
    futures.reserve(cfg.restarts);
    for (int r = 0; r < cfg.restarts; ++r)
      futures.push_back(std::async(std::launch::async, run, r));
    for (int r = 0; r < cfg.restarts; ++r) outcomes[r] = futures[r].get();
  } else {
    for (int r = 0; r < cfg.restarts; ++r) outcomes[r] = run(r);
  }

  int best = 0;
  for (int r = 1; r < cfg.restarts; ++r)
    if (outcomes[r].fidelity < outcomes[best].fidelity) best = r;

  WorstCaseResult result;
  result.fidelity = outcomes[best].fidelity;
  result.accepted = std::move(outcomes[best].accepted);
  Matrix rho = Matrix::Zero(truth.dim_in, truth.dim_in);
  const Matrix tt = outcomes[best].t_best.adjoint() * outcomes[best].t_best;
  rho.topLeftCorner(sub_dim, sub_dim) = tt / tt.trace().real();
  result.rho_min = rho;

  // the exact Fock corners are candidates in their own right; the sampled
  // factorization can only approach pure states asymptotically
  for (int n = 0; n < sub_dim; ++n) {
    Matrix corner = Matrix::Zero(truth.dim_in, truth.dim_in);
    corner(n, n) = 1.0;
    const Matrix out_true = truth(corner);
    const Matrix out_est = estimate(corner);
    if (!(out_true.trace().real() > 1e-12) || !(out_est.trace().real() > 1e-12)) continue;
    const double f = uhlmann_fidelity(out_true, out_est);
    if (f < result.fidelity) {
      result.fidelity = f;
      result.rho_min = corner;
    }
  }
  return result;
}

struct DiagRow {
  int m = 0;
  int k = 0;
  double value = 0.0;
};

// Real parts of the diagonal elements E^{mm}_{kk}: the probability of k
// output photons given m input photons.  Physical outputs only.
inline std::vector<DiagRow> diag_table(const ProcessTensor& e) {
  std::vector<DiagRow> rows;
  rows.reserve(static_cast<std::size_t>(e.dim_in) * e.physical_dim_out());
  for (int m = 0; m < e.dim_in; ++m) {
    for (int k = 0; k < e.physical_dim_out(); ++k) {
      const Complex val = tensor_element(e, m, m, k, k);
      if (std::abs(val.imag()) > 1e-8)
        throw NumericalError("diag_table: diagonal element has imaginary part " +
                             std::to_string(val.imag()));
      rows.push_back({m, k, val.real()});
    }
  }
  return rows;
}

}  // namespace csqpt

#endif  // CSQPT_METRICS_HPP
