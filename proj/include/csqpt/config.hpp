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

#ifndef CSQPT_CONFIG_HPP
#define CSQPT_CONFIG_HPP

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "csqpt/metrics.hpp"
#include "csqpt/mle.hpp"
#include "csqpt/simulator.hpp"

// Pipeline configuration: a versioned, human-editable JSON schema covering
// the process model, probe grid, simulation, binning, reconstruction and
// metrics settings.  Parsing and serialization round-trip exactly.

namespace csqpt {

using Json = nlohmann::ordered_json;

struct PipelineConfig {
  int schema_version = 1;

  ProcessModel model = ProcessModel::identity();

  // probe grid; an explicit list overrides the (alpha_max, count) grid
  double alpha_max = 0.9375;
  int probe_count = 4;
  std::vector<Complex> probe_list;

  // simulation
  std::int64_t n_per_probe = 100000;
  double sim_eta = 1.0;
  PhaseDistribution phase = PhaseDistribution::uniform();
  bool exact_weights = false;
  int sim_dim_margin = 4;  // generator cutoff margin above n_max + 1

  // binning
  BinGrid bins;

  // reconstruction
  int n_max = 7;
  IterationConfig mle;

  // metrics
  WorstCaseConfig metrics;

  std::uint64_t seed = 1;
  std::string out_dir = "out";

  std::vector<ProbeSpec> probes() const {
    if (!probe_list.empty()) {
      std::vector<ProbeSpec> list;
      for (std::size_t m = 0; m < probe_list.size(); ++m)
        list.push_back({probe_list[m], static_cast<int>(m)});
      return list;
    }
    return probe_grid(alpha_max, probe_count);
  }

  int dim() const { return n_max + 1; }
  int sim_dim() const { return dim() + sim_dim_margin; }

  void validate() const {
    if (schema_version != 1) throw ConfigError("config: unsupported schema version");
    if (n_max < 0) throw ConfigError("config: n_max must be >= 0");
    if (n_per_probe < 1) throw ConfigError("config: n_per_probe must be >= 1");
    if (!(sim_eta > 0.0) || sim_eta > 1.0) throw ConfigError("config: eta must lie in (0, 1]");
    bins.validate();
    model.validate();
    mle.validate();
    metrics.validate();
  }
};

inline Json to_json(const PipelineConfig& c) {
  Json j;
  j["schema_version"] = c.schema_version;
  j["model"] = {{"kind", c.model.name()}, {"param", c.model.param}};
  Json probes;
  probes["alpha_max"] = c.alpha_max;
  probes["count"] = c.probe_count;
  if (!c.probe_list.empty()) {
    Json list = Json::array();
    for (const auto& a : c.probe_list) list.push_back({{"re", a.real()}, {"im", a.imag()}});
    probes["list"] = list;
  }
  j["probes"] = probes;
  j["simulate"] = {{"n_per_probe", c.n_per_probe},
                   {"eta", c.sim_eta},
                   {"phase_kind", c.phase.kind == PhaseKind::UniformRandom ? "uniform" : "spaced"},
                   {"phase_count", c.phase.count},
                   {"phase_offset", c.phase.offset},
                   {"exact", c.exact_weights},
                   {"dim_margin", c.sim_dim_margin}};
  j["bins"] = {{"n_theta", c.bins.n_theta()},
               {"n_x", c.bins.n_x},
               {"x_min", c.bins.x_min},
               {"x_max", c.bins.x_max}};
  j["mle"] = {{"n_max", c.n_max},
              {"mu", c.mle.mu},
              {"mu_schedule",
               c.mle.mu_schedule == MuSchedule::Fixed ? "fixed" : "adaptive-over-relax"},
              {"mu_ceiling", c.mle.mu_ceiling},
              {"mu_ramp_step", c.mle.mu_ramp_step},
              {"mu_stability_window", c.mle.mu_stability_window},
              {"max_iters", c.mle.max_iters},
              {"ll_rel_tol", c.mle.ll_rel_tol},
              {"ll_stable_iters", c.mle.ll_stable_iters},
              {"eigen_floor", c.mle.eigen_floor},
              {"phase_invariant", c.mle.phase_invariant},
              {"eta", c.mle.eta},
              {"g_rescale", c.mle.g_rescale},
              {"crop", c.mle.crop_to},
              {"threads", c.mle.threads}};
  j["metrics"] = {{"n_input_max", c.metrics.n_input_max},
                  {"walk_steps", c.metrics.walk_steps},
                  {"step_sigma", c.metrics.step_sigma},
                  {"restarts", c.metrics.restarts},
                  {"seed", c.metrics.seed}};
  j["seed"] = c.seed;
  j["out"] = c.out_dir;
  return j;
}

inline PipelineConfig config_from_json(const Json& j) {
  PipelineConfig c;
  try {
    c.schema_version = j.value("schema_version", 1);
    if (j.contains("model")) {
      const auto& jm = j.at("model");
      const std::string kind = jm.value("kind", "identity");
      const double param = jm.value("param", 0.0);
      if (kind == "identity")
        c.model = ProcessModel::identity();
      else if (kind == "attenuation")
        c.model = ProcessModel::attenuation(param);
      else if (kind == "phase_shift")
        c.model = ProcessModel::phase_shift(param);
      else if (kind == "photon_creation")
        c.model = ProcessModel::photon_creation(param);
      else
        throw ConfigError("config: unknown model kind '" + kind + "'");
    }
    if (j.contains("probes")) {
      const auto& jp = j.at("probes");
      c.alpha_max = jp.value("alpha_max", c.alpha_max);
      c.probe_count = jp.value("count", c.probe_count);
      if (jp.contains("list"))
        for (const auto& ja : jp.at("list"))
          c.probe_list.emplace_back(ja.value("re", 0.0), ja.value("im", 0.0));
    }
    if (j.contains("simulate")) {
      const auto& js = j.at("simulate");
      c.n_per_probe = js.value("n_per_probe", c.n_per_probe);
      c.sim_eta = js.value("eta", c.sim_eta);
      const std::string pk = js.value("phase_kind", "uniform");
      if (pk == "uniform")
        c.phase.kind = PhaseKind::UniformRandom;
      else if (pk == "spaced")
        c.phase.kind = PhaseKind::EvenlySpaced;
      else
        throw ConfigError("config: unknown phase kind '" + pk + "'");
      c.phase.count = js.value("phase_count", 0);
      c.phase.offset = js.value("phase_offset", 0.0);
      c.exact_weights = js.value("exact", false);
      c.sim_dim_margin = js.value("dim_margin", c.sim_dim_margin);
    }
    if (j.contains("bins")) {
      const auto& jb = j.at("bins");
      c.bins.dtheta = 2.0 * M_PI / jb.value("n_theta", c.bins.n_theta());
      c.bins.n_x = jb.value("n_x", c.bins.n_x);
      c.bins.x_min = jb.value("x_min", c.bins.x_min);
      c.bins.x_max = jb.value("x_max", c.bins.x_max);
    }
    if (j.contains("mle")) {
      const auto& jm = j.at("mle");
      c.n_max = jm.value("n_max", c.n_max);
      c.mle.mu = jm.value("mu", c.mle.mu);
      const std::string sched = jm.value("mu_schedule", "adaptive-over-relax");
      if (sched == "fixed")
        c.mle.mu_schedule = MuSchedule::Fixed;
      else if (sched == "adaptive-over-relax")
        c.mle.mu_schedule = MuSchedule::AdaptiveOverRelax;
      else
        throw ConfigError("config: unknown mu schedule '" + sched + "'");
      c.mle.mu_ceiling = jm.value("mu_ceiling", c.mle.mu_ceiling);
      c.mle.mu_ramp_step = jm.value("mu_ramp_step", c.mle.mu_ramp_step);
      c.mle.mu_stability_window = jm.value("mu_stability_window", c.mle.mu_stability_window);
      c.mle.max_iters = jm.value("max_iters", c.mle.max_iters);
      c.mle.ll_rel_tol = jm.value("ll_rel_tol", c.mle.ll_rel_tol);
      c.mle.ll_stable_iters = jm.value("ll_stable_iters", c.mle.ll_stable_iters);
      c.mle.eigen_floor = jm.value("eigen_floor", c.mle.eigen_floor);
      c.mle.phase_invariant = jm.value("phase_invariant", c.mle.phase_invariant);
      c.mle.eta = jm.value("eta", c.mle.eta);
      c.mle.g_rescale = jm.value("g_rescale", c.mle.g_rescale);
      c.mle.crop_to = jm.value("crop", c.mle.crop_to);
      c.mle.threads = jm.value("threads", c.mle.threads);
    }
    if (j.contains("metrics")) {
      const auto& jm = j.at("metrics");
      c.metrics.n_input_max = jm.value("n_input_max", c.metrics.n_input_max);
      c.metrics.walk_steps = jm.value("walk_steps", c.metrics.walk_steps);
      c.metrics.step_sigma = jm.value("step_sigma", c.metrics.step_sigma);
      c.metrics.restarts = jm.value("restarts", c.metrics.restarts);
      c.metrics.seed = jm.value("seed", c.metrics.seed);
    }
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out", c.out_dir);
  } catch (const Json::exception& err) {
    throw ConfigError(std::string("config: malformed JSON structure: ") + err.what());
  }
  c.mle.dim_in = c.dim();
  c.mle.dim_out_physical = c.dim();
  c.validate();
  return c;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& err) {
    throw ConfigError(path + ": JSON parse error: " + err.what());
  }
  return config_from_json(j);
}

inline void save_config(const std::string& path, const PipelineConfig& c) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open config file for writing: " + path);
  out << to_json(c).dump(2) << "\n";
}

}  // namespace csqpt

#endif  // CSQPT_CONFIG_HPP
