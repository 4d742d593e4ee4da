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

#ifndef CSQPT_HILBERT_HPP
#define CSQPT_HILBERT_HPP

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

// Truncated Fock-space numerics: oscillator wavefunctions, quadrature
// projectors, loss transforms and the Hermitian-matrix utilities the
// reconstruction engine is built on.
//
// Conventions fixed here and used throughout the library:
//   * quadrature wavefunction  psi_m(x) = pi^{-1/4} H_m(x) e^{-x^2/2} / sqrt(2^m m!)
//     (vacuum quadrature variance 1/2),
//   * quadrature eigenstate overlap  <m|theta,x> = e^{i m theta} psi_m(x),
//   * bipartite flattening  row = m * dimK + j  for operators on H (x) K.

namespace csqpt {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

// Thrown on malformed configuration values.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when input data and the requested model are incompatible
// (unreadable files, schema mismatches, zero-probability bins, ...).
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an internal numerical invariant is violated, e.g. a matrix
// that should be positive semidefinite has a significantly negative
// eigenvalue.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Scalar detector efficiency, modelled as a beamsplitter of intensity
// transmission eta in front of an ideal detector.
struct LossModel {
  double eta = 1.0;

  void validate() const {
    if (!(eta > 0.0) || eta > 1.0)
      throw ConfigError("LossModel: eta must lie in (0, 1], got " + std::to_string(eta));
  }
};

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

// Physicists' Hermite polynomial H_m(x) via the three-term recurrence
// H_{m+1} = 2 x H_m - 2 m H_{m-1}.
inline double hermite(int m, double x) {
  if (m < 0) throw ConfigError("hermite: order must be nonnegative");
  double prev = 1.0;  // H_0
  if (m == 0) return prev;
  double cur = 2.0 * x;  // H_1
  for (int k = 1; k < m; ++k) {
    const double next = 2.0 * x * cur - 2.0 * static_cast<double>(k) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

inline double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

// Generalized Bernoulli amplitude B_{p,q}(eta) = sqrt(C(p, p-q) eta^q (1-eta)^{p-q})
// for p >= q >= 0.  Evaluated in log space so large cutoffs stay accurate.
inline double bernoulli_amp(int p, int q, double eta) {
  if (q > p || q < 0) return 0.0;
  if (p == q) return std::pow(eta, 0.5 * q);
  if (eta >= 1.0) return 0.0;  // p > q has a (1-eta) factor
  const double log_binom = log_factorial(p) - log_factorial(q) - log_factorial(p - q);
  return std::exp(0.5 * (log_binom + q * std::log(eta) + (p - q) * std::log1p(-eta)));
}

// Normalized oscillator wavefunctions psi_0(x) .. psi_{dim-1}(x).
// Uses the stable normalized recurrence
//   psi_{m+1} = x sqrt(2/(m+1)) psi_m - sqrt(m/(m+1)) psi_{m-1},
// which agrees with pi^{-1/4} H_m(x) e^{-x^2/2} / sqrt(2^m m!) but never
// forms the large intermediate H_m values.
inline RealVector fock_wavefunctions(int dim, double x) {
  if (dim < 1) throw ConfigError("fock_wavefunctions: dim must be >= 1");
  RealVector psi(dim);
  const double pi_quarter = std::pow(M_PI, -0.25);
  psi[0] = pi_quarter * std::exp(-0.5 * x * x);
  if (dim == 1) return psi;
  psi[1] = std::sqrt(2.0) * x * psi[0];
  for (int m = 1; m + 1 < dim; ++m) {
    psi[m + 1] = x * std::sqrt(2.0 / (m + 1.0)) * psi[m] -
                 std::sqrt(static_cast<double>(m) / (m + 1.0)) * psi[m - 1];
  }
  return psi;
}

// Overlap <m|theta,x> = e^{i m theta} psi_m(x) of the quadrature eigenstate
// with the Fock state |m>.
inline Complex quad_overlap(int m, double theta, double x) {
  if (m < 0) throw ConfigError("quad_overlap: m must be nonnegative");
  const RealVector psi = fock_wavefunctions(m + 1, x);
  return std::polar(psi[m], m * theta);
}

// All overlaps <m|theta,x> for m < dim as one vector.
inline Vector quad_overlap_vector(int dim, double theta, double x) {
  const RealVector psi = fock_wavefunctions(dim, x);
  Vector v(dim);
  for (int m = 0; m < dim; ++m) v[m] = std::polar(psi[m], m * theta);
  return v;
}

// ---------------------------------------------------------------------------
// Projectors and loss transforms
// ---------------------------------------------------------------------------

// Rank-1 quadrature projector Pi_{mn}(theta,x) = <m|theta,x><theta,x|n>.
inline Matrix projector(double theta, double x, int dim) {
  const Vector v = quad_overlap_vector(dim, theta, x);
  return v * v.adjoint();
}

// Loss channel on states: rho'_{mn} = sum_k B_{m+k,m} B_{n+k,n} rho_{m+k,n+k}.
// Moves population towards lower photon numbers; exact for states supported
// inside the cutoff, with leakage only from the truncated upper rows.
inline Matrix apply_loss(const Matrix& rho, LossModel loss) {
  loss.validate();
  const int dim = static_cast<int>(rho.rows());
  if (rho.cols() != dim) throw ConfigError("apply_loss: matrix must be square");
  if (loss.eta >= 1.0) return rho;
  Matrix out = Matrix::Zero(dim, dim);
  for (int m = 0; m < dim; ++m) {
    for (int n = 0; n < dim; ++n) {
      Complex acc = 0.0;
      const int kmax = dim - 1 - std::max(m, n);
      for (int k = 0; k <= kmax; ++k) {
        acc += bernoulli_amp(m + k, m, loss.eta) * bernoulli_amp(n + k, n, loss.eta) *
               rho(m + k, n + k);
      }
      out(m, n) = acc;
    }
  }
  return out;
}

// POVM element of an inefficient quadrature measurement: the Heisenberg dual
// of apply_loss acting on the ideal projector,
//   (Pi_eta)_{ab} = sum_k B_{a,a-k} B_{b,b-k} Pi_{a-k,b-k},
// so that Tr[rho Pi_eta] = Tr[apply_loss(rho, eta) Pi] for any state inside
// the cutoff.  Restricted to dim x dim this is exact: the sum over k is
// finite without truncation.
inline Matrix lossy_projector(double theta, double x, LossModel loss, int dim) {
  loss.validate();
  const Matrix pi = projector(theta, x, dim);
  if (loss.eta >= 1.0) return pi;
  Matrix out = Matrix::Zero(dim, dim);
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) {
      Complex acc = 0.0;
      for (int k = 0; k <= std::min(a, b); ++k) {
        acc += bernoulli_amp(a, a - k, loss.eta) * bernoulli_amp(b, b - k, loss.eta) *
               pi(a - k, b - k);
      }
      out(a, b) = acc;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Coherent states
// ---------------------------------------------------------------------------

// Truncated coherent state.  Deliberately not renormalized: the quoted
// trace deficit 1 - <alpha|alpha> measures how much of the state falls
// outside the cutoff.
struct FockVector {
  Vector amplitudes;
  double trace_deficit = 0.0;

  int dim() const { return static_cast<int>(amplitudes.size()); }
};

inline FockVector coherent_vector(Complex alpha, int dim) {
  if (dim < 1) throw ConfigError("coherent_vector: dim must be >= 1");
  FockVector state;
  state.amplitudes.resize(dim);
  const double norm = std::exp(-0.5 * std::norm(alpha));
  Complex amp = norm;  // e^{-|alpha|^2/2} alpha^n / sqrt(n!)
  state.amplitudes[0] = amp;
  for (int n = 1; n < dim; ++n) {
    amp *= alpha / std::sqrt(static_cast<double>(n));
    state.amplitudes[n] = amp;
  }
  state.trace_deficit = 1.0 - state.amplitudes.squaredNorm();
  return state;
}

// |<alpha|n>|^2 evaluated in log space.
inline double coherent_overlap_sq(double alpha_abs, int n) {
  const double a2 = alpha_abs * alpha_abs;
  if (a2 == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(-a2 + n * std::log(a2) - log_factorial(n));
}

// Smallest Fock number whose occupation under the strongest probe drops to
// one expected count in n_samples measurements.  Probing beyond it yields
// tensor elements the data cannot support.
struct CutoffSuggestion {
  int n = 0;
  double overlap = 0.0;
};

inline CutoffSuggestion suggested_fock_cutoff(double alpha_max, double n_samples) {
  if (n_samples < 1.0) throw ConfigError("suggested_fock_cutoff: sample count must be >= 1");
  if (alpha_max < 0.0) throw ConfigError("suggested_fock_cutoff: alpha_max must be >= 0");
  const double threshold = 1.0 / n_samples;
  for (int n = 0; n < 4096; ++n) {
    const double overlap = coherent_overlap_sq(alpha_max, n);
    if (overlap <= threshold) return {n, overlap};
  }
  throw ConfigError("suggested_fock_cutoff: no cutoff below 4096; check inputs");
}

// ---------------------------------------------------------------------------
// Hermitian-matrix utilities
// ---------------------------------------------------------------------------

inline double hermiticity_defect(const Matrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const Matrix& m, double tol = 1e-12) {
  return m.rows() == m.cols() && hermiticity_defect(m) <= tol;
}

inline Matrix hermitize(const Matrix& m) { return 0.5 * (m + m.adjoint()); }

inline double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Hermitian square root by eigendecomposition.  Eigenvalues in [-1e-6, 0)
// are treated as rounding noise and clamped to zero; anything below -1e-6
// signals corrupted state and is rejected.
inline Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(m));
  RealVector vals = es.eigenvalues();
  for (int i = 0; i < vals.size(); ++i) {
    if (vals[i] < -1e-6)
      throw NumericalError("psd_sqrt: eigenvalue " + std::to_string(vals[i]) +
                           " is negative beyond tolerance");
    vals[i] = vals[i] > 0.0 ? std::sqrt(vals[i]) : 0.0;
  }
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
}

// Moore-Penrose pseudo-inverse of a PSD matrix: eigenvalues at or below
// `floor` are inverted to zero.
inline Matrix psd_pinv(const Matrix& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(m));
  RealVector vals = es.eigenvalues();
  for (int i = 0; i < vals.size(); ++i) {
    vals[i] = vals[i] > floor ? 1.0 / vals[i] : 0.0;
  }
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
}

// Partial trace over the K factor of an operator on H (x) K with the
// row = m * dimK + j flattening: (Tr_K M)_{mn} = sum_j M_{(m,j),(n,j)}.
inline Matrix partial_trace_K(const Matrix& m, int dim_h, int dim_k) {
  if (m.rows() != static_cast<Eigen::Index>(dim_h) * dim_k || m.rows() != m.cols())
    throw ConfigError("partial_trace_K: dimension mismatch");
  Matrix out = Matrix::Zero(dim_h, dim_h);
  for (int a = 0; a < dim_h; ++a) {
    for (int b = 0; b < dim_h; ++b) {
      Complex acc = 0.0;
      for (int j = 0; j < dim_k; ++j) acc += m(a * dim_k + j, b * dim_k + j);
      out(a, b) = acc;
    }
  }
  return out;
}

// Kronecker product with H as the slow index, matching the global
// row = m * dimK + j convention.
inline Matrix kron_hk(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace csqpt

#endif  // CSQPT_HILBERT_HPP
