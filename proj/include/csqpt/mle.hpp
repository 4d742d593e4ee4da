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

#ifndef CSQPT_MLE_HPP
#define CSQPT_MLE_HPP

#include <chrono>
#include <future>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "csqpt/histogram.hpp"
#include "csqpt/process.hpp"
#include "csqpt/simulator.hpp"

// Maximum-likelihood process reconstruction.  The estimate solves the
// extremal equation E = L^-1 R E R L^-1 with L = lambda (x) I_K and
// lambda^2 = Tr_K[R E R], iterated from the uniform tensor.  R is the
// likelihood gradient assembled from the binned data; dilution mixes it
// with the identity for stability, and values slightly above one realize
// successive over-relaxation.

namespace csqpt {

// POVM matrix of one occupied bin.  Ideal detection keeps the rank-1
// factor; loss-corrected elements are dense.
struct BinPovm {
  Vector v;      // <j|theta,x> overlaps (ideal detection)
  Matrix dense;  // loss-corrected element (lossy path only)
  bool lossy = false;

  double expectation(const Matrix& sigma) const {
    if (lossy) return dense.cwiseProduct(sigma.transpose()).sum().real();
    return (v.adjoint() * sigma * v).value().real();
  }

  void accumulate(Matrix& w, double weight) const {
    if (lossy)
      w.noalias() += weight * dense;
    else
      w.noalias() += weight * (v * v.adjoint());
  }
};

// Projector matrices for every occupied bin of a histogram, at the physical
// output dimension.  Shared across iterations and across probes.
struct PovmCache {
  BinGrid grid;
  int dim = 0;
  double eta = 1.0;
  std::map<BinKey, int> slot;
  std::vector<BinPovm> povms;

  static PovmCache build(const QuadratureHistogram& hist, int dim, double eta) {
    PovmCache cache;
    cache.grid = hist.grid;
    cache.dim = dim;
    cache.eta = eta;
    const bool lossy = eta < 1.0;
    for (const auto& probe_counts : hist.counts) {
      for (const auto& [key, count] : probe_counts) {
        (void)count;
        if (cache.slot.count(key)) continue;
        const double theta = hist.grid.theta_center(key.first);
        const double x = hist.grid.x_center(key.second);
        BinPovm p;
        p.lossy = lossy;
        if (lossy)
          p.dense = lossy_projector(theta, x, LossModel{eta}, dim);
        else
          p.v = quad_overlap_vector(dim, theta, x);
        cache.slot[key] = static_cast<int>(cache.povms.size());
        cache.povms.push_back(std::move(p));
      }
    }
    return cache;
  }

  const BinPovm& at(const BinKey& key) const {
    const auto it = slot.find(key);
    if (it == slot.end()) throw DataError("PovmCache: no cache entry for occupied bin");
    return povms[it->second];
  }
};

enum class MuSchedule { Fixed, AdaptiveOverRelax };

struct IterationConfig {
  int dim_in = 8;
  int dim_out_physical = 8;
  double mu = 0.6;
  MuSchedule mu_schedule = MuSchedule::AdaptiveOverRelax;
  double mu_ceiling = 1.3;
  double mu_ramp_step = 0.02;
  int mu_stability_window = 20;
  int max_iters = 5000;
  double ll_rel_tol = 1e-9;
  int ll_stable_iters = 10;
  double eigen_floor = 1e-12;  // relative spectral floor for lambda^2
  bool phase_invariant = true;
  double eta = -1.0;      // POVM correction efficiency; <= 0 adopts the histogram's
  double g_rescale = 1.0; // common rescaling of the success fractions
  int crop_to = -1;       // secondary cutoff n'_max, negative disables
  int threads = 1;
  bool track_diagnostics = true;

  void validate() const {
    if (dim_in < 1 || dim_out_physical < 1) throw ConfigError("IterationConfig: bad dimensions");
    if (!(mu > 0.0)) throw ConfigError("IterationConfig: mu must be positive");
    if (!(ll_rel_tol > 0.0)) throw ConfigError("IterationConfig: ll_rel_tol must be positive");
    if (!(g_rescale > 0.0)) throw ConfigError("IterationConfig: g_rescale must be positive");
  }
};

struct ReconstructionReport {
  ProcessTensor estimate;          // heralded when the data is; physical block
                                   // divided by g_rescale
  std::vector<double> loglik_trace;
  std::vector<double> mu_history;
  int iterations = 0;
  bool converged = false;
  bool lambda_floor_hit = false;   // lambda was rank deficient at some iteration
  double final_trace_defect = 0.0; // of the converged constrained tensor
  double max_trace_defect = 0.0;   // worst over all iterations
  double final_min_eigenvalue = 0.0;
  double min_min_eigenvalue = 0.0;
  double wall_seconds = 0.0;
};

// mu R + (1 - mu) I.  mu < 1 dilutes the update towards a no-op, mu > 1
// over-relaxes it.
inline Matrix dilute(const Matrix& r, double mu) {
  if (!(mu > 0.0)) throw ConfigError("dilute: mu must be positive");
  return mu * r + (1.0 - mu) * Matrix::Identity(r.rows(), r.cols());
}

struct IterationStep {
  ProcessTensor e_next;
  Matrix lambda;
  bool floored = false;
};

// One constrained update E -> L+ R E R L+ with lambda^2 = Tr_K[R E R].
// The spectral floor is relative to the largest eigenvalue of lambda^2;
// directions below it (unprobed by the data) keep their previous content,
// which preserves Tr_K[E] = I_H globally even when R is rank deficient.
inline IterationStep iterate_once(const ProcessTensor& e, const Matrix& r_diluted,
                                  double eigen_floor = 1e-12) {
  e.validate_dims();
  if (r_diluted.rows() != e.op.rows() || r_diluted.cols() != e.op.cols())
    throw ConfigError("iterate_once: R dimension mismatch");

  const Matrix g = hermitize(r_diluted * e.op * r_diluted);
  const Matrix lambda_sq = partial_trace_K(g, e.dim_in, e.dim_out);

  Eigen::SelfAdjointEigenSolver<Matrix> es(lambda_sq);
  const RealVector vals = es.eigenvalues();
  const double vmax = vals.maxCoeff();
  if (!(vmax > 0.0))
    throw NumericalError("iterate_once: Tr_K[R E R] vanished; iteration state is corrupted");
  const double threshold = eigen_floor * vmax;

  RealVector sqrt_vals = RealVector::Zero(vals.size());
  RealVector inv_sqrt = RealVector::Zero(vals.size());
  RealVector dropped = RealVector::Zero(vals.size());
  bool floored = false;
  for (int i = 0; i < vals.size(); ++i) {
    if (vals[i] > threshold) {
      sqrt_vals[i] = std::sqrt(vals[i]);
      inv_sqrt[i] = 1.0 / sqrt_vals[i];
    } else {
      dropped[i] = 1.0;
      floored = true;
    }
  }

  const Matrix& u = es.eigenvectors();
  const Matrix lambda = u * sqrt_vals.asDiagonal() * u.adjoint();
  const Matrix lambda_pinv_sqrt = u * inv_sqrt.asDiagonal() * u.adjoint();
  const Matrix big_inv = kron_hk(lambda_pinv_sqrt, Matrix::Identity(e.dim_out, e.dim_out));

  IterationStep step;
  step.e_next = e;
  step.e_next.op = big_inv * g * big_inv;
  if (floored) {
    const Matrix p_perp = u * dropped.asDiagonal() * u.adjoint();
    const Matrix lift = kron_hk(p_perp, Matrix::Identity(e.dim_out, e.dim_out));
    step.e_next.op += lift * e.op * lift;
  }
  step.e_next.op = hermitize(step.e_next.op);
  step.lambda = lambda;
  step.floored = floored;
  return step;
}

#ifndef CSQPT_DOXYGEN_INTERNAL
namespace detail {

struct ProbeTerms {
  Matrix rho;    // probe density matrix (input space)
  Matrix rho_t;  // its transpose, the H-side factor of the R summands
  double total = 0.0;
  double g_eff = 1.0;
  std::vector<BinKey> keys;
  std::vector<const BinPovm*> povm;
  std::vector<double> weight;
};

struct LikelihoodWorkspace {
  int dim_in = 0;
  int dim_out_physical = 0;
  bool heralded = false;
  double total_counts = 0.0;
  std::vector<ProbeTerms> probes;

  static LikelihoodWorkspace build(const QuadratureHistogram& hist, const PovmCache& cache,
                                   std::span<const double> g, int dim_in, bool heralded) {
    if (static_cast<int>(g.size()) != hist.num_probes())
      throw ConfigError("likelihood: success-fraction list does not match probe count");
    LikelihoodWorkspace ws;
    ws.dim_in = dim_in;
    ws.dim_out_physical = cache.dim;
    ws.heralded = heralded;
    ws.probes.resize(hist.num_probes());
    for (int m = 0; m < hist.num_probes(); ++m) {
      auto& p = ws.probes[m];
      p.rho = probe_density(ProbeSpec{hist.probe_alphas[m], m}, dim_in);
      p.rho_t = p.rho.transpose();
      p.total = hist.total[m];
      p.g_eff = g[static_cast<std::size_t>(m)];
      if (heralded && (!(p.g_eff > 0.0) || p.g_eff >= 1.0))
        throw ConfigError("likelihood: heralded success fraction must lie in (0, 1), got " +
                          std::to_string(p.g_eff));
      p.keys.reserve(hist.counts[m].size());
      for (const auto& [key, count] : hist.counts[m]) {
        p.keys.push_back(key);
        p.povm.push_back(&cache.at(key));
        p.weight.push_back(count);
      }
      ws.total_counts += p.total;
    }
    if (!(ws.total_counts > 0.0)) throw DataError("likelihood: histogram holds no counts");
    return ws;
  }
};

struct ProbePass {
  double loglik = 0.0;
  Matrix r_block;  // output-side accumulation, dim_out_total square
};

// Likelihood contribution and R block of one probe for the current tensor.
inline ProbePass probe_pass(const ProcessTensor& e, const ProbeTerms& terms, bool heralded,
                            bool want_r) {
  const int p_dim = heralded ? e.dim_out - 1 : e.dim_out;
  const Matrix sigma_full = csqpt::apply(e, terms.rho);
  const Matrix sigma = sigma_full.topLeftCorner(p_dim, p_dim);
  const double scale = heralded ? terms.g_eff : 1.0;

  ProbePass pass;
  if (want_r) pass.r_block = Matrix::Zero(e.dim_out, e.dim_out);
  Matrix w = want_r ? Matrix::Zero(p_dim, p_dim) : Matrix();
  for (std::size_t i = 0; i < terms.povm.size(); ++i) {
    const double p = terms.povm[i]->expectation(sigma);
    if (p <= 1e-300)
      throw DataError("likelihood: zero probability on occupied bin (theta " +
                      std::to_string(terms.keys[i].first) + ", x " +
                      std::to_string(terms.keys[i].second) +
                      "); the model cannot produce this data");
    pass.loglik += scale * terms.weight[i] * std::log(p);
    if (want_r) terms.povm[i]->accumulate(w, scale * terms.weight[i] / p);
  }
  if (heralded) {
    const double fail_weight = terms.total * (1.0 - terms.g_eff);
    const double p_fail = sigma_full(e.dim_out - 1, e.dim_out - 1).real();
    if (fail_weight > 0.0) {
      if (p_fail <= 1e-300)
        throw DataError("likelihood: zero probability for the fail outcome");
      pass.loglik += fail_weight * std::log(p_fail);
      if (want_r) pass.r_block(e.dim_out - 1, e.dim_out - 1) = fail_weight / p_fail;
    }
  }
  if (want_r) pass.r_block.topLeftCorner(p_dim, p_dim) = w;
  return pass;
}

struct PassResult {
  double loglik = 0.0;
  Matrix r;
};

// Full pass over all probes.  Probes are processed as independent tasks and
// combined in probe order, so the result does not depend on the thread
// count.
inline PassResult likelihood_pass(const ProcessTensor& e, const LikelihoodWorkspace& ws,
                                  bool want_r, bool phase_invariant, int threads) {
  const int n = static_cast<int>(ws.probes.size());
  std::vector<ProbePass> passes(n);
  if (threads > 1 && n > 1) {
    std::vector<std::future<ProbePass>> futures;
    futures.reserve(n);
    for (int m = 0; m < n; ++m)
      futures.push_back(std::async(std::launch::async, [&, m] {
        return probe_pass(e, ws.probes[m], ws.heralded, want_r);
      }));
    for (int m = 0; m < n; ++m) passes[m] = futures[m].get();
  } else {
    for (int m = 0; m < n; ++m) passes[m] = probe_pass(e, ws.probes[m], ws.heralded, want_r);
  }

  PassResult result;
  if (want_r) result.r = Matrix::Zero(e.op.rows(), e.op.cols());
  for (int m = 0; m < n; ++m) {
    result.loglik += passes[m].loglik;
    if (want_r) result.r += kron_hk(ws.probes[m].rho_t, passes[m].r_block);
  }
  if (want_r) {
    result.r /= ws.total_counts;
    if (phase_invariant) {
      ProcessTensor wrap{e.dim_in, e.dim_out, e.heralded, std::move(result.r)};
      result.r = mask(wrap).op;
    }
    result.r = hermitize(result.r);
  }
  return result;
}

}  // namespace detail
#endif

// Binned log-likelihood of a tensor: sum_m g_m sum_{u,v} h ln p plus, for
// heralded tensors, the per-probe fail term N_m (1 - g_m) ln p_fail.
inline double log_likelihood(const ProcessTensor& e, const QuadratureHistogram& hist,
                             const PovmCache& cache, std::span<const double> g) {
  const auto ws = detail::LikelihoodWorkspace::build(hist, cache, g, e.dim_in, e.heralded);
  return detail::likelihood_pass(e, ws, false, false, 1).loglik;
}

inline double log_likelihood(const ProcessTensor& e, const QuadratureHistogram& hist,
                             const PovmCache& cache) {
  return log_likelihood(e, hist, cache, hist.g);
}

// Likelihood-gradient operator, normalized by the total record count so it
// mixes with the identity at a comparable scale under dilution (the
// iteration itself is invariant under this scaling).
inline Matrix build_R(const ProcessTensor& e, const QuadratureHistogram& hist,
                      const PovmCache& cache, std::span<const double> g,
                      const IterationConfig& cfg) {
  const auto ws = detail::LikelihoodWorkspace::build(hist, cache, g, e.dim_in, e.heralded);
  return detail::likelihood_pass(e, ws, true, cfg.phase_invariant, cfg.threads).r;
}

// Full reconstruction loop with the configured dilution / over-relaxation
// schedule and stopping rule.
inline ReconstructionReport reconstruct(const QuadratureHistogram& hist,
                                        const IterationConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();

  bool heralded = false;
  for (double gm : hist.g) {
    if (!(gm > 0.0) || gm > 1.0)
      throw DataError("reconstruct: success fractions must lie in (0, 1]");
    if (gm < 1.0 - 1e-12) heralded = true;
  }
  std::vector<double> g_eff = hist.g;
  if (heralded) {
    for (double& gm : g_eff) {
      gm *= cfg.g_rescale;
      if (gm >= 1.0)
        throw ConfigError("reconstruct: rescaled success fraction reaches 1; lower g_rescale");
    }
  }

  const double eta = cfg.eta > 0.0 ? cfg.eta : hist.eta;
  const PovmCache cache = PovmCache::build(hist, cfg.dim_out_physical, eta);
  const auto ws =
      detail::LikelihoodWorkspace::build(hist, cache, g_eff, cfg.dim_in, heralded);

  const int dim_out = cfg.dim_out_physical + (heralded ? 1 : 0);
  ProcessTensor e = uniform_tensor(cfg.dim_in, dim_out, heralded);

  // The stationary value of the normalized gradient operator is the
  // count-weighted average probe (transposed) tensored with the identity;
  // over-relaxation extrapolates against it.  Mixing with the plain
  // identity instead overshoots wildly along weakly probed directions,
  // because the stationary operator is far from the identity here.
  Matrix r_station = Matrix::Zero(e.op.rows(), e.op.cols());
  {
    double total = 0.0;
    for (const auto& p : ws.probes) total += p.total;
    for (const auto& p : ws.probes)
      r_station += (p.total / total) *
                   kron_hk(p.rho_t, Matrix::Identity(dim_out, dim_out));
    if (cfg.phase_invariant) {
      ProcessTensor wrap{cfg.dim_in, dim_out, heralded, std::move(r_station)};
      r_station = mask(wrap).op;
    }
  }

  ReconstructionReport report;
  report.loglik_trace.reserve(cfg.max_iters + 1);
  report.min_min_eigenvalue = 1.0;

  double mu = std::min(cfg.mu, cfg.mu_schedule == MuSchedule::AdaptiveOverRelax ? 1.0 : cfg.mu);
  const double mu_ceiling = cfg.mu_ceiling;
  bool ramping = false;
  int increase_streak = 0;
  int stable_count = 0;

  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    const auto pass = detail::likelihood_pass(e, ws, true, cfg.phase_invariant, cfg.threads);
    const double loglik = pass.loglik;

    if (!report.loglik_trace.empty()) {
      const double prev = report.loglik_trace.back();
      const double rel = (loglik - prev) / std::max(std::abs(loglik), 1e-30);
      if (loglik < prev) {
        // overshoot: drop back to the plain iteration and re-stabilize
        // before ramping again
        if (cfg.mu_schedule == MuSchedule::AdaptiveOverRelax) {
          mu = std::min(mu, 1.0);
          ramping = false;
        }
        increase_streak = 0;
        stable_count = 0;
      } else {
        ++increase_streak;
        if (cfg.mu_schedule == MuSchedule::AdaptiveOverRelax) {
          if (!ramping && increase_streak >= cfg.mu_stability_window)
            ramping = true;
          else if (ramping)
            mu = std::min(mu + cfg.mu_ramp_step, mu_ceiling);
        }
        stable_count = rel < cfg.ll_rel_tol ? stable_count + 1 : 0;
      }
    }
    report.loglik_trace.push_back(loglik);
    if (stable_count >= cfg.ll_stable_iters) {
      report.converged = true;
      break;
    }

    const Matrix r_diluted =
        mu > 1.0 ? Matrix(mu * pass.r + (1.0 - mu) * r_station) : dilute(pass.r, mu);
    IterationStep step = iterate_once(e, r_diluted, cfg.eigen_floor);
    e = std::move(step.e_next);
    if (cfg.phase_invariant) e = mask(e);
    report.lambda_floor_hit = report.lambda_floor_hit || step.floored;
    report.mu_history.push_back(mu);

    if (cfg.track_diagnostics) {
      const double defect = trace_defect(e);
      const double min_eig = min_eigenvalue(e.op);
      report.max_trace_defect = std::max(report.max_trace_defect, defect);
      report.min_min_eigenvalue = std::min(report.min_min_eigenvalue, min_eig);
    }
  }
  if (!report.converged) {
    // record the likelihood of the state the loop ended on
    report.loglik_trace.push_back(
        detail::likelihood_pass(e, ws, false, cfg.phase_invariant, cfg.threads).loglik);
  }
  report.iterations = iter;
  report.final_trace_defect = trace_defect(e);
  report.final_min_eigenvalue = min_eigenvalue(e.op);
  if (report.min_min_eigenvalue > report.final_min_eigenvalue)
    report.min_min_eigenvalue = report.final_min_eigenvalue;

  if (heralded && cfg.g_rescale != 1.0) {
    const int p_dim = e.dim_out - 1;
    for (int m = 0; m < e.dim_in; ++m)
      for (int j = 0; j < p_dim; ++j)
        for (int n = 0; n < e.dim_in; ++n)
          for (int k = 0; k < p_dim; ++k)
            e.op(e.flat(m, j), e.flat(n, k)) /= cfg.g_rescale;
  }
  if (cfg.crop_to >= 0) e = crop(e, cfg.crop_to);

  report.estimate = std::move(e);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

// Convenience: bin a raw dataset with the given grid, then reconstruct.
inline ReconstructionReport reconstruct(const HomodyneDataset& ds, const BinGrid& grid,
                                        const IterationConfig& cfg) {
  return reconstruct(bin(ds, grid), cfg);
}

}  // namespace csqpt

#endif  // CSQPT_MLE_HPP
