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

#ifndef CSQPT_PROCESS_HPP
#define CSQPT_PROCESS_HPP

#include <cmath>
#include <string>

#include "csqpt/hilbert.hpp"

// Jamiolkowski representation of a quantum-optical process: a positive
// operator E on H (x) K whose matrix elements E_{(m,j),(n,k)} are the
// rank-4 tensor entries E^{mn}_{jk} = <j| E(|m><n|) |k>.  Trace
// preservation reads Tr_K[E] = I_H.  Probabilistic processes carry an
// extra "fail" output state appended as the last K index.

namespace csqpt {

struct ProcessTensor {
  int dim_in = 0;       // input (H) cutoff dimension
  int dim_out = 0;      // output (K) dimension, including the fail slot if heralded
  bool heralded = false;  // last K index is the fictitious fail state
  Matrix op;            // (dim_in*dim_out)^2 operator, row = m*dim_out + j

  int physical_dim_out() const { return heralded ? dim_out - 1 : dim_out; }
  Eigen::Index flat(int m, int j) const { return static_cast<Eigen::Index>(m) * dim_out + j; }

  void validate_dims() const {
    if (dim_in < 1 || dim_out < 1 || (heralded && dim_out < 2))
      throw ConfigError("ProcessTensor: invalid dimensions");
    if (op.rows() != static_cast<Eigen::Index>(dim_in) * dim_out || op.rows() != op.cols())
      throw ConfigError("ProcessTensor: operator size does not match dimensions");
  }
};

// Uniform ("maximally mixed over outputs") tensor used as the unbiased
// starting point of the reconstruction.
inline ProcessTensor uniform_tensor(int dim_in, int dim_out, bool heralded) {
  ProcessTensor e;
  e.dim_in = dim_in;
  e.dim_out = dim_out;
  e.heralded = heralded;
  e.op = Matrix::Identity(dim_in * dim_out, dim_in * dim_out) / static_cast<double>(dim_out);
  return e;
}

inline Complex tensor_element(const ProcessTensor& e, int m, int n, int j, int k) {
  if (m < 0 || n < 0 || m >= e.dim_in || n >= e.dim_in || j < 0 || k < 0 || j >= e.dim_out ||
      k >= e.dim_out)
    throw ConfigError("tensor_element: index out of range");
  return e.op(e.flat(m, j), e.flat(n, k));
}

// rho_out = Tr_H[ E (rho_in^T (x) I_K) ], i.e. (rho_out)_{jk} = sum_{mn} E^{mn}_{jk} rho_{mn}.
// For heralded tensors the output includes the fail row/column.
inline Matrix apply(const ProcessTensor& e, const Matrix& rho_in) {
  if (rho_in.rows() != e.dim_in || rho_in.cols() != e.dim_in)
    throw ConfigError("apply: input state dimension mismatch");
  Matrix out = Matrix::Zero(e.dim_out, e.dim_out);
  for (int j = 0; j < e.dim_out; ++j) {
    for (int k = 0; k < e.dim_out; ++k) {
      Complex acc = 0.0;
      for (int m = 0; m < e.dim_in; ++m)
        for (int n = 0; n < e.dim_in; ++n) acc += e.op(e.flat(m, j), e.flat(n, k)) * rho_in(m, n);
      out(j, k) = acc;
    }
  }
  return out;
}

// Column-stacked transfer matrix T with vec(rho_out) = T vec(rho_in).
// Worth caching when a tensor is applied to many states.
inline Matrix transfer_matrix(const ProcessTensor& e) {
  Matrix t(static_cast<Eigen::Index>(e.dim_out) * e.dim_out,
           static_cast<Eigen::Index>(e.dim_in) * e.dim_in);
  for (int j = 0; j < e.dim_out; ++j)
    for (int k = 0; k < e.dim_out; ++k)
      for (int m = 0; m < e.dim_in; ++m)
        for (int n = 0; n < e.dim_in; ++n)
          t(j + static_cast<Eigen::Index>(k) * e.dim_out,
            m + static_cast<Eigen::Index>(n) * e.dim_in) = e.op(e.flat(m, j), e.flat(n, k));
  return t;
}

// Max-abs entry of Tr_K[E] - I_H.
inline double trace_defect(const ProcessTensor& e) {
  const Matrix tr = partial_trace_K(e.op, e.dim_in, e.dim_out);
  return (tr - Matrix::Identity(e.dim_in, e.dim_in)).cwiseAbs().maxCoeff();
}

inline ProcessTensor strip_heralding(const ProcessTensor& e);

// Probability that the (possibly probabilistic) process fires on input rho:
// the trace of the physical-output block of E(rho).
inline double success_probability(const ProcessTensor& e, const Matrix& rho) {
  const Matrix out = csqpt::apply(e, rho);
  double p = 0.0;
  for (int j = 0; j < e.physical_dim_out(); ++j) p += out(j, j).real();
  return p;
}

// Phase charge of an output index; the fail state is insensitive to optical
// phase and carries charge zero.
inline int output_phase_charge(const ProcessTensor& e, int j) {
  return (e.heralded && j == e.dim_out - 1) ? 0 : j;
}

// Phase-invariance mask: zeroes every element with m - n != j - k (fail slot
// counted with charge zero).  Idempotent and self-adjoint as a linear map.
inline ProcessTensor mask(const ProcessTensor& e) {
  ProcessTensor out = e;
  for (int m = 0; m < e.dim_in; ++m)
    for (int j = 0; j < e.dim_out; ++j)
      for (int n = 0; n < e.dim_in; ++n)
        for (int k = 0; k < e.dim_out; ++k)
          if (m - n != output_phase_charge(e, j) - output_phase_charge(e, k))
            out.op(out.flat(m, j), out.flat(n, k)) = Complex(0.0, 0.0);
  return out;
}

// Discards every element with a physical index above n_prime_max.  The
// result lives on the reduced spaces; a heralded fail slot is kept.
inline ProcessTensor crop(const ProcessTensor& e, int n_prime_max) {
  const int keep = n_prime_max + 1;
  if (n_prime_max < 0 || keep > e.dim_in || keep > e.physical_dim_out())
    throw ConfigError("crop: n_prime_max out of range");
  ProcessTensor out;
  out.dim_in = keep;
  out.dim_out = e.heralded ? keep + 1 : keep;
  out.heralded = e.heralded;
  out.op = Matrix::Zero(out.dim_in * out.dim_out, out.dim_in * out.dim_out);
  auto old_j = [&](int j) { return (e.heralded && j == out.dim_out - 1) ? e.dim_out - 1 : j; };
  for (int m = 0; m < out.dim_in; ++m)
    for (int j = 0; j < out.dim_out; ++j)
      for (int n = 0; n < out.dim_in; ++n)
        for (int k = 0; k < out.dim_out; ++k)
          out.op(out.flat(m, j), out.flat(n, k)) = e.op(e.flat(m, old_j(j)), e.flat(n, old_j(k)));
  return out;
}

// Drops the fail sector of a heralded tensor, leaving the (trace
// non-preserving) physical block.
inline ProcessTensor strip_heralding(const ProcessTensor& e) {
  if (!e.heralded) throw ConfigError("strip_heralding: tensor is not heralded");
  ProcessTensor out;
  out.dim_in = e.dim_in;
  out.dim_out = e.dim_out - 1;
  out.heralded = false;
  out.op = Matrix::Zero(out.dim_in * out.dim_out, out.dim_in * out.dim_out);
  for (int m = 0; m < out.dim_in; ++m)
    for (int j = 0; j < out.dim_out; ++j)
      for (int n = 0; n < out.dim_in; ++n)
        for (int k = 0; k < out.dim_out; ++k)
          out.op(out.flat(m, j), out.flat(n, k)) = e.op(e.flat(m, j), e.flat(n, k));
  return out;
}

// Embeds a physical tensor into the heralded space with an all-zero fail
// sector.  Inverse of strip_heralding up to the dropped sector.
inline ProcessTensor extend_heralding(const ProcessTensor& e) {
  if (e.heralded) throw ConfigError("extend_heralding: tensor already heralded");
  ProcessTensor out;
  out.dim_in = e.dim_in;
  out.dim_out = e.dim_out + 1;
  out.heralded = true;
  out.op = Matrix::Zero(out.dim_in * out.dim_out, out.dim_in * out.dim_out);
  for (int m = 0; m < e.dim_in; ++m)
    for (int j = 0; j < e.dim_out; ++j)
      for (int n = 0; n < e.dim_in; ++n)
        for (int k = 0; k < e.dim_out; ++k)
          out.op(out.flat(m, j), out.flat(n, k)) = e.op(e.flat(m, j), e.flat(n, k));
  return out;
}

// ---------------------------------------------------------------------------
// Built-in analytic models
// ---------------------------------------------------------------------------

struct ProcessModel {
  enum class Kind { Identity, Attenuation, PhaseShift, PhotonCreation };

  Kind kind = Kind::Identity;
  double param = 0.0;  // eta_p, phi or g^2 depending on kind

  static ProcessModel identity() { return {Kind::Identity, 0.0}; }
  static ProcessModel attenuation(double eta_p) { return {Kind::Attenuation, eta_p}; }
  static ProcessModel phase_shift(double phi) { return {Kind::PhaseShift, phi}; }
  static ProcessModel photon_creation(double g_sq) { return {Kind::PhotonCreation, g_sq}; }

  bool deterministic() const { return kind != Kind::PhotonCreation; }

  std::string name() const {
    switch (kind) {
      case Kind::Identity: return "identity";
      case Kind::Attenuation: return "attenuation";
      case Kind::PhaseShift: return "phase_shift";
      case Kind::PhotonCreation: return "photon_creation";
    }
    return "unknown";
  }

  void validate() const {
    if (kind == Kind::Attenuation && (!(param > 0.0) || param > 1.0))
      throw ConfigError("attenuation: transmission must lie in (0, 1]");
    if (kind == Kind::PhotonCreation && !(param > 0.0))
      throw ConfigError("photon_creation: g^2 must be positive");
  }
};

// Analytic reference tensor of a built-in model on the given spaces.
//   identity:        E^{mn}_{jk} = d_{mj} d_{nk}
//   phase_shift:     E^{mn}_{jk} = d_{mj} d_{nk} e^{i (m-n) phi}
//   attenuation:     beamsplitter Kraus channel A_l = sum_m B_{m,m-l} |m-l><m|
//   photon_creation: E(rho) = g^2 a^dag rho a, truncated at the output cutoff
// Stored symmetrized so downstream eigendecompositions see an exactly
// Hermitian operator.
inline ProcessTensor reference_tensor(const ProcessModel& model, int dim_h, int dim_k) {
  model.validate();
  if (dim_h < 1 || dim_k < 1) throw ConfigError("reference_tensor: dims must be >= 1");
  ProcessTensor e;
  e.dim_in = dim_h;
  e.dim_out = dim_k;
  e.heralded = false;
  const Eigen::Index dim = static_cast<Eigen::Index>(dim_h) * dim_k;
  e.op = Matrix::Zero(dim, dim);

  switch (model.kind) {
    case ProcessModel::Kind::Identity:
    case ProcessModel::Kind::PhaseShift: {
      const double phi = model.kind == ProcessModel::Kind::PhaseShift ? model.param : 0.0;
      Vector phi_vec = Vector::Zero(dim);
      for (int m = 0; m < std::min(dim_h, dim_k); ++m)
        phi_vec[e.flat(m, m)] = std::polar(1.0, m * phi);
      e.op = phi_vec * phi_vec.adjoint();
      break;
    }
    case ProcessModel::Kind::Attenuation: {
      for (int l = 0; l < dim_h; ++l) {
        Vector kraus_vec = Vector::Zero(dim);  // entries (m, j=m-l) -> B_{m,m-l}
        for (int m = l; m < dim_h; ++m) {
          if (m - l >= dim_k) continue;
          kraus_vec[e.flat(m, m - l)] = bernoulli_amp(m, m - l, model.param);
        }
        e.op += kraus_vec * kraus_vec.adjoint();
      }
      break;
    }
    case ProcessModel::Kind::PhotonCreation: {
      Vector ladder = Vector::Zero(dim);
      for (int m = 0; m < dim_h && m + 1 < dim_k; ++m)
        ladder[e.flat(m, m + 1)] = std::sqrt(m + 1.0);
      e.op = model.param * (ladder * ladder.adjoint());
      break;
    }
  }
  e.op = hermitize(e.op);
  return e;
}

}  // namespace csqpt

#endif  // CSQPT_PROCESS_HPP
