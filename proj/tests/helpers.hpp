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

#ifndef CSQPT_TESTS_HELPERS_HPP
#define CSQPT_TESTS_HELPERS_HPP

#include <functional>
#include <vector>

#include "csqpt/hilbert.hpp"
#include "csqpt/process.hpp"
#include "csqpt/simulator.hpp"

namespace csqpt::testing {

inline Matrix random_matrix(Rng& rng, int dim) {
  Matrix m(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = Complex(rng.gaussian(), rng.gaussian());
  return m;
}

inline Matrix random_hermitian(Rng& rng, int dim) { return hermitize(random_matrix(rng, dim)); }

inline Matrix random_psd(Rng& rng, int dim, int rank = -1) {
  if (rank < 0) rank = dim;
  Matrix a(dim, rank);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < rank; ++j) a(i, j) = Complex(rng.gaussian(), rng.gaussian());
  return a * a.adjoint();
}

inline Matrix random_density(Rng& rng, int dim) {
  Matrix rho = random_psd(rng, dim);
  return rho / rho.trace().real();
}

inline Vector random_pure(Rng& rng, int dim) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = Complex(rng.gaussian(), rng.gaussian());
  return v / v.norm();
}

inline Matrix random_unitary(Rng& rng, int dim) {
  const Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, dim));
  return qr.householderQ();
}

// Random trace-preserving PSD tensor: an arbitrary PSD operator retracted
// onto the Tr_K[E] = I_H manifold.
inline ProcessTensor random_cptp(Rng& rng, int dim_in, int dim_out, bool heralded = false) {
  const int n = dim_in * dim_out;
  const Matrix x = random_psd(rng, n) + 0.1 * Matrix::Identity(n, n);
  const Matrix tr = partial_trace_K(x, dim_in, dim_out);
  const Matrix fix = kron_hk(psd_pinv(psd_sqrt(tr), 1e-14), Matrix::Identity(dim_out, dim_out));
  ProcessTensor e;
  e.dim_in = dim_in;
  e.dim_out = dim_out;
  e.heralded = heralded;
  e.op = hermitize(fix * x * fix);
  return e;
}

// Phase-shift unitary diag(e^{i n phi}) in the number basis.
inline Matrix number_phase(int dim, double phi) {
  Matrix u = Matrix::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) u(n, n) = std::polar(1.0, n * phi);
  return u;
}

inline double trapezoid(const std::function<double(double)>& f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double acc = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < n; ++i) acc += f(lo + i * h);
  return acc * h;
}

// Empirical-vs-analytic Kolmogorov-Smirnov statistic.  The analytic CDF is
// provided on a fine sorted grid.
inline double ks_statistic(std::vector<double> samples, const std::vector<double>& grid,
                           const std::vector<double>& cdf) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto it = std::upper_bound(grid.begin(), grid.end(), samples[i]);
    double f = 0.0;
    if (it == grid.begin())
      f = 0.0;
    else if (it == grid.end())
      f = cdf.back();
    else {
      const std::size_t hi = static_cast<std::size_t>(it - grid.begin());
      const double t = (samples[i] - grid[hi - 1]) / (grid[hi] - grid[hi - 1]);
      f = cdf[hi - 1] + t * (cdf[hi] - cdf[hi - 1]);
    }
    d = std::max(d, std::abs((i + 1) / n - f));
    d = std::max(d, std::abs(i / n - f));
  }
  return d;
}

}  // namespace csqpt::testing

#endif  // CSQPT_TESTS_HELPERS_HPP
