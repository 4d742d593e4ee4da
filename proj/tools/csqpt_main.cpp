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

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "csqpt/pipeline.hpp"

// Command-line surface: simulate homodyne datasets, reconstruct process
// tensors, evaluate them against analytic references, sweep cutoffs and
// print the cutoff guideline.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 reconstruction hit the iteration cap, 1 unexpected failure.

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUnexpected = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNoConvergence = 4;

struct Overrides {
  std::string config_path;
  std::string out_dir;
  bool has_seed = false;
  std::uint64_t seed = 0;
  bool has_eta = false;
  double eta = 1.0;
  bool exact = false;
  int crop = -1;
  double rescale_g = 1.0;
};

csqpt::PipelineConfig make_config(const Overrides& ov, bool eta_is_simulation) {
  csqpt::PipelineConfig cfg;
  if (!ov.config_path.empty()) cfg = csqpt::load_config(ov.config_path);
  if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
  if (ov.has_seed) cfg.seed = ov.seed;
  if (ov.has_eta) {
    if (eta_is_simulation)
      cfg.sim_eta = ov.eta;
    else
      cfg.mle.eta = ov.eta;
  }
  if (ov.exact) cfg.exact_weights = true;
  if (ov.crop >= 0) cfg.mle.crop_to = ov.crop;
  cfg.mle.dim_in = cfg.dim();
  cfg.mle.dim_out_physical = cfg.dim();
  return cfg;
}

void add_common_options(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--config", ov.config_path, "pipeline config file (JSON)");
  cmd->add_option("--out", ov.out_dir, "output directory");
  cmd->add_option("--seed", ov.seed, "random seed")->each([&](const std::string&) {
    ov.has_seed = true;
  });
  cmd->add_option("--eta", ov.eta, "detector efficiency")->each([&](const std::string&) {
    ov.has_eta = true;
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"csqpt: coherent-state quantum process tomography"};
  app.require_subcommand(1);

  Overrides ov;

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic homodyne dataset");
  add_common_options(simulate, ov);
  bool binary = false;
  simulate->add_flag("--exact", ov.exact, "write analytic bin weights instead of samples");
  simulate->add_flag("--binary", binary, "write the compact binary dataset format");

  auto* reconstruct = app.add_subcommand("reconstruct", "run the iterative reconstruction");
  add_common_options(reconstruct, ov);
  std::string input_path;
  reconstruct->add_option("input", input_path, "dataset or histogram file")->required();
  reconstruct->add_option("--crop", ov.crop, "secondary cutoff n'_max applied to the result");
  reconstruct->add_option("--rescale-g", ov.rescale_g,
                          "rescale success fractions during the iteration");

  auto* evaluate = app.add_subcommand("evaluate", "compare an estimate against the reference model");
  add_common_options(evaluate, ov);
  std::string estimate_path;
  evaluate->add_option("estimate", estimate_path, "estimate tensor file")->required();
  evaluate->add_option("--crop", ov.crop, "crop the estimate before comparing");
  evaluate->add_option("--rescale-g", ov.rescale_g,
                       "divide the estimate's physical elements before comparing");

  auto* sweep = app.add_subcommand("sweep-cutoff", "fidelity sweep over Fock cutoffs");
  add_common_options(sweep, ov);
  std::vector<int> n_max_list{2, 3, 4, 5, 6, 7, 8};
  std::vector<int> n_prime_list;
  sweep->add_option("--n-max", n_max_list, "primary cutoffs to sweep");
  sweep->add_option("--n-prime-max", n_prime_list, "secondary cutoffs (paired with larger n_max)");

  auto* guideline = app.add_subcommand("guideline", "suggest n_max for a probe set");
  double alpha_max = 0.0;
  double n_samples = 0.0;
  guideline->add_option("alpha-max", alpha_max, "largest probe amplitude")->required();
  guideline->add_option("n-samples", n_samples, "total number of quadrature measurements")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (simulate->parsed()) {
      const auto cfg = make_config(ov, /*eta_is_simulation=*/true);
      const auto outcome = csqpt::run_simulate(cfg, binary);
      std::printf("wrote %s\n", outcome.path.c_str());
      for (std::size_t m = 0; m < outcome.g.size(); ++m)
        std::printf("probe %zu: g = %.6g, trace deficit = %.3g%s\n", m, outcome.g[m],
                    outcome.trace_deficit[m],
                    outcome.trace_deficit[m] > 1e-4 ? "  ** raise n_max **" : "");
      return kExitOk;
    }

    if (reconstruct->parsed()) {
      auto cfg = make_config(ov, /*eta_is_simulation=*/false);
      cfg.mle.g_rescale = ov.rescale_g;
      const auto outcome = csqpt::run_reconstruct(cfg, input_path);
      const auto& rep = outcome.report;
      std::printf("%s after %d iterations, loglik %.6f\n",
                  rep.converged ? "converged" : "stopped at max-iters", rep.iterations,
                  rep.loglik_trace.empty() ? 0.0 : rep.loglik_trace.back());
      std::printf("trace defect %.3g, min eigenvalue %.3g\n", rep.final_trace_defect,
                  rep.final_min_eigenvalue);
      std::printf("wrote %s\n", outcome.tensor_path.c_str());
      return rep.converged ? kExitOk : kExitNoConvergence;
    }

    if (evaluate->parsed()) {
      const auto cfg = make_config(ov, /*eta_is_simulation=*/false);
      const auto outcome = csqpt::run_evaluate(cfg, estimate_path, ov.rescale_g, ov.crop);
      std::printf("worst-case fidelity %.6f\n", outcome.worst_case);
      std::printf("max |diag error| %.6f\n", outcome.max_abs_diag_error);
      std::printf("wrote %s, %s, %s\n", outcome.diag_table_path.c_str(),
                  outcome.metrics_path.c_str(), outcome.figure_path.c_str());
      return kExitOk;
    }

    if (sweep->parsed()) {
      auto cfg = make_config(ov, /*eta_is_simulation=*/true);
      cfg.exact_weights = true;  // the sweep is defined on noise-free weights
      const auto outcome = csqpt::run_sweep_cutoff(cfg, n_max_list, n_prime_list);
      for (const auto& cell : outcome.cells)
        std::printf("n_max %d, n'_max %d: %s%.6f%s\n", cell.n_max, cell.n_prime_max,
                    cell.ok ? "F = " : "failed (", cell.ok ? cell.fidelity : 0.0,
                    cell.ok ? "" : (cell.error + ")").c_str());
      std::printf("wrote %s\n", outcome.table_path.c_str());
      return kExitOk;
    }

    if (guideline->parsed()) {
      const auto suggestion = csqpt::run_guideline(alpha_max, n_samples);
      std::printf("suggested n_max = %d (|<alpha|n>|^2 = %.6g at alpha = %.6g)\n", suggestion.n,
                  suggestion.overlap, alpha_max);
      return kExitOk;
    }
  } catch (const csqpt::ConfigError& err) {
    std::fprintf(stderr, "config error: %s\n", err.what());
    return kExitConfig;
  } catch (const csqpt::DataError& err) {
    std::fprintf(stderr, "data error: %s\n", err.what());
    return kExitData;
  } catch (const csqpt::SimulationError& err) {
    std::fprintf(stderr, "simulation error: %s\n", err.what());
    return kExitData;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return kExitUnexpected;
  }
  return kExitUnexpected;
}
