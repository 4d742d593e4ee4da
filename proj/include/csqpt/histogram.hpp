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

#ifndef CSQPT_HISTOGRAM_HPP
#define CSQPT_HISTOGRAM_HPP

#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "csqpt/hilbert.hpp"

// Binned (theta, x) statistics: the sufficient statistic of the binned
// likelihood.  Bin weights are kept as doubles so the same container holds
// integer sample counts and analytic weights.

namespace csqpt {

struct BinGrid {
  double dtheta = 2.0 * M_PI / 64;  // phase bin width; the phase axis covers [0, 2 pi)
  int n_x = 128;
  double x_min = -6.0;
  double x_max = 6.0;

  static BinGrid with_counts(int n_theta, int n_x, double x_min = -6.0, double x_max = 6.0) {
    BinGrid g;
    g.dtheta = 2.0 * M_PI / n_theta;
    g.n_x = n_x;
    g.x_min = x_min;
    g.x_max = x_max;
    return g;
  }

  int n_theta() const { return static_cast<int>(std::ceil(2.0 * M_PI / dtheta - 1e-9)); }
  double dx() const { return (x_max - x_min) / n_x; }
  double theta_center(int u) const { return (u + 0.5) * dtheta; }
  double x_center(int v) const { return x_min + (v + 0.5) * dx(); }

  void validate() const {
    if (!(dtheta > 0.0) || dtheta > 2.0 * M_PI + 1e-12 || n_x < 1 || !(x_max > x_min))
      throw ConfigError("BinGrid: invalid bin layout");
  }
};

using BinKey = std::pair<int, int>;  // (u, v) = (theta bin, x bin)
using BinCounts = std::map<BinKey, double>;  // sorted keys fix the reduction order

// Per-probe binned records plus the probe metadata needed to evaluate the
// likelihood without going back to the raw dataset.
struct QuadratureHistogram {
  int schema_version = 1;
  BinGrid grid;
  double eta = 1.0;  // detector efficiency the data was taken at
  std::vector<Complex> probe_alphas;
  std::vector<double> g;              // per-probe success fraction
  std::vector<double> trace_deficit;  // per-probe coherent truncation deficit
  std::vector<BinCounts> counts;
  std::vector<double> total;          // sum of weights per probe
  std::vector<std::uint64_t> dropped; // records outside the x range

  int num_probes() const { return static_cast<int>(probe_alphas.size()); }
};

}  // namespace csqpt

#endif  // CSQPT_HISTOGRAM_HPP
