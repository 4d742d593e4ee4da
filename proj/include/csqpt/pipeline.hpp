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

#ifndef CSQPT_PIPELINE_HPP
#define CSQPT_PIPELINE_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "csqpt/config.hpp"
#include "csqpt/figures.hpp"
#include "csqpt/io.hpp"
#include "csqpt/metrics.hpp"
#include "csqpt/mle.hpp"
#include "csqpt/simulator.hpp"

// The pipeline behind the command-line surface: each run_* function is one
// subcommand, shared by the CLI binary and the test suites.

namespace csqpt {

namespace fs = std::filesystem;

#ifndef CSQPT_DOXYGEN_INTERNAL
namespace detail {

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory: " + dir.string());
}

// Writes through a temporary name so interrupted runs leave no partial file.
template <typename WriteFn>
void write_atomically(const fs::path& path, WriteFn&& write) {
  const fs::path tmp = path.string() + ".tmp";
  try {
    write(tmp.string());
    fs::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    throw;
  }
}

}  // namespace detail
#endif

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOutcome {
  std::string path;
  bool exact = false;
  std::vector<double> g;
  std::vector<double> trace_deficit;
};

// Generates a dataset (sampled records) or, in exact mode, the analytic bin
// weights, and writes it under the configured output directory.
inline SimulateOutcome run_simulate(const PipelineConfig& cfg, bool binary = false) {
  cfg.validate();
  detail::ensure_dir(cfg.out_dir);
  const auto probes = cfg.probes();
  const LossModel loss{cfg.sim_eta};

  SimulateOutcome outcome;
  outcome.exact = cfg.exact_weights;
  if (cfg.exact_weights) {
    const QuadratureHistogram hist =
        exact_histogram(cfg.model, probes, static_cast<double>(cfg.n_per_probe), loss,
                        cfg.sim_dim(), cfg.bins);
    const fs::path path = fs::path(cfg.out_dir) / "weights.histogram";
    detail::write_atomically(path, [&](const std::string& p) { save_histogram(p, hist); });
    outcome.path = path.string();
    outcome.g = hist.g;
    outcome.trace_deficit = hist.trace_deficit;
  } else {
    const HomodyneDataset ds = simulate_dataset(cfg.model, probes, cfg.n_per_probe, loss,
                                                cfg.seed, cfg.sim_dim(), cfg.phase);
    const fs::path path = fs::path(cfg.out_dir) / (binary ? "samples.dataset.bin" : "samples.dataset");
    detail::write_atomically(path, [&](const std::string& p) {
      if (binary)
        save_dataset_binary(p, ds);
      else
        save_dataset(p, ds);
    });
    outcome.path = path.string();
    outcome.g = ds.g;
    outcome.trace_deficit = ds.trace_deficit;
  }
  return outcome;
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

struct ReconstructOutcome {
  ReconstructionReport report;
  std::string tensor_path;
  std::string physical_tensor_path;  // empty if not heralded
  std::string loglik_path;
  std::string report_path;
};

inline HomodyneDataset load_dataset_any(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw DataError("cannot open for reading: " + path);
  char magic[8] = {};
  probe.read(magic, 8);
  probe.close();
  if (std::memcmp(magic, "CSQPTDS1", 8) == 0) return load_dataset_binary(path);
  return load_dataset(path);
}

inline ReconstructOutcome run_reconstruct(const PipelineConfig& cfg,
                                          const std::string& input_path) {
  cfg.validate();
  detail::ensure_dir(cfg.out_dir);

  QuadratureHistogram hist;
  bool is_hist = false;
  {
    std::ifstream probe(input_path);
    if (!probe) throw DataError("cannot open for reading: " + input_path);
    char c = 0;
    probe.get(c);
    is_hist = (c == 'c') && file_is_histogram(input_path);
  }
  if (is_hist)
    hist = load_histogram(input_path);
  else
    hist = bin(load_dataset_any(input_path), cfg.bins);

  IterationConfig mle_cfg = cfg.mle;
  mle_cfg.dim_in = cfg.dim();
  mle_cfg.dim_out_physical = cfg.dim();

  ReconstructOutcome outcome;
  outcome.report = reconstruct(hist, mle_cfg);
  const auto& report = outcome.report;

  const fs::path out(cfg.out_dir);
  outcome.tensor_path = (out / "estimate.tensor").string();
  detail::write_atomically(outcome.tensor_path,
                           [&](const std::string& p) { save_tensor(p, report.estimate); });
  if (report.estimate.heralded) {
    outcome.physical_tensor_path = (out / "estimate_physical.tensor").string();
    detail::write_atomically(outcome.physical_tensor_path, [&](const std::string& p) {
      save_tensor(p, strip_heralding(report.estimate));
    });
  }
  outcome.loglik_path = (out / "loglik.tsv").string();
  save_loglik_trace(outcome.loglik_path, report.loglik_trace);

  Json j;
  j["converged"] = report.converged;
  j["iterations"] = report.iterations;
  j["final_loglik"] = report.loglik_trace.empty() ? 0.0 : report.loglik_trace.back();
  j["final_trace_defect"] = report.final_trace_defect;
  j["max_trace_defect"] = report.max_trace_defect;
  j["final_min_eigenvalue"] = report.final_min_eigenvalue;
  j["min_min_eigenvalue"] = report.min_min_eigenvalue;
  j["lambda_floor_hit"] = report.lambda_floor_hit;
  j["final_mu"] = report.mu_history.empty() ? mle_cfg.mu : report.mu_history.back();
  j["wall_seconds"] = report.wall_seconds;
  j["dim_in"] = report.estimate.dim_in;
  j["dim_out"] = report.estimate.dim_out;
  j["heralded"] = report.estimate.heralded;
  j["eta_correction"] = mle_cfg.eta > 0.0 ? mle_cfg.eta : hist.eta;
  j["g_rescale"] = mle_cfg.g_rescale;
  outcome.report_path = (out / "report.json").string();
  std::ofstream rep(outcome.report_path);
  rep << j.dump(2) << "\n";
  return outcome;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateOutcome {
  double worst_case = 1.0;
  double max_abs_diag_error = 0.0;
  std::string diag_table_path;
  std::string metrics_path;
  std::string figure_path;
};

// Compares an estimate against the analytic reference model: paired diagonal
// tables, a worst-case fidelity and a bar-chart figure.  rescale_g divides
// the estimate's physical elements before the comparison.
inline EvaluateOutcome run_evaluate(const PipelineConfig& cfg, const std::string& estimate_path,
                                    double rescale_g = 1.0, int crop_to = -1) {
  cfg.validate();
  if (!(rescale_g > 0.0)) throw ConfigError("evaluate: rescale factor must be positive");
  detail::ensure_dir(cfg.out_dir);

  ProcessTensor est = load_tensor(estimate_path);
  if (est.heralded) est = strip_heralding(est);
  if (crop_to >= 0) est = crop(est, crop_to);
  est.op /= rescale_g;

  // Comparison happens at the rescaled presentation scale: dividing both
  // sides by g^2 puts a probabilistic estimate next to the unit-amplitude
  // theory.
  ProcessTensor ref = reference_tensor(cfg.model, est.dim_in, est.dim_out);
  ref.op /= rescale_g;

  const auto ref_rows = diag_table(ref);
  const auto est_rows = diag_table(est);

  EvaluateOutcome outcome;
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < ref_rows.size(); ++i) {
    outcome.max_abs_diag_error =
        std::max(outcome.max_abs_diag_error, std::abs(ref_rows[i].value - est_rows[i].value));
    rows.push_back({std::to_string(ref_rows[i].m), std::to_string(ref_rows[i].k),
                    format_double(ref_rows[i].value), format_double(est_rows[i].value)});
  }
  const fs::path out(cfg.out_dir);
  outcome.diag_table_path = (out / "diag.tsv").string();
  save_table(outcome.diag_table_path, {"m", "k", "reference", "estimate"}, rows);

  WorstCaseConfig wc = cfg.metrics;
  if (wc.n_input_max < 0) wc.n_input_max = est.dim_in - 2;
  const WorstCaseResult worst = worst_case_fidelity(ref, est, wc);
  outcome.worst_case = worst.fidelity;

  Json j;
  j["model"] = cfg.model.name();
  j["model_param"] = cfg.model.param;
  j["rescale_g"] = rescale_g;
  j["worst_case_fidelity"] = worst.fidelity;
  j["n_input_max"] = wc.n_input_max;
  j["max_abs_diag_error"] = outcome.max_abs_diag_error;
  outcome.metrics_path = (out / "metrics.json").string();
  std::ofstream mf(outcome.metrics_path);
  mf << j.dump(2) << "\n";

  DiagPanel panel_ref{"reference: " + cfg.model.name(), ref.dim_in, ref.dim_out, ref_rows};
  DiagPanel panel_est{"estimate", est.dim_in, est.dim_out, est_rows};
  outcome.figure_path = (out / "diag.svg").string();
  save_diag_figure(outcome.figure_path, {panel_ref, panel_est});
  return outcome;
}

// ---------------------------------------------------------------------------
// sweep-cutoff
// ---------------------------------------------------------------------------

struct SweepCell {
  int n_max = 0;
  int n_prime_max = 0;
  double fidelity = 0.0;
  int iterations = 0;
  bool converged = false;
  bool ok = false;
  std::string error;
};

struct SweepOutcome {
  std::vector<SweepCell> cells;
  std::string table_path;
  std::string figure_path;
};

#ifndef CSQPT_DOXYGEN_INTERNAL
namespace detail {

inline SweepCell run_sweep_cell(const PipelineConfig& cfg, int n_max, int n_prime) {
  SweepCell cell;
  cell.n_max = n_max;
  cell.n_prime_max = n_prime;
  try {
    const int dim = n_max + 1;
    const auto probes = probe_grid(cfg.alpha_max, cfg.probe_count);
    const QuadratureHistogram hist =
        exact_histogram(cfg.model, probes, static_cast<double>(cfg.n_per_probe),
                        LossModel{cfg.sim_eta}, dim + cfg.sim_dim_margin, cfg.bins);

    IterationConfig mle_cfg = cfg.mle;
    mle_cfg.dim_in = dim;
    mle_cfg.dim_out_physical = dim;
    const ReconstructionReport report = reconstruct(hist, mle_cfg);
    cell.iterations = report.iterations;
    cell.converged = report.converged;

    ProcessTensor est = report.estimate;
    if (est.heralded) est = strip_heralding(est);
    if (n_prime < n_max) est = crop(est, n_prime);
    const ProcessTensor ref = reference_tensor(cfg.model, est.dim_in, est.dim_out);

    WorstCaseConfig wc = cfg.metrics;
    wc.n_input_max = n_prime - 1;  // keeps the compared outputs inside the cutoff
    cell.fidelity = worst_case_fidelity(ref, est, wc).fidelity;
    cell.ok = true;
  } catch (const std::exception& err) {
    cell.ok = false;
    cell.error = err.what();
  }
  return cell;
}

}  // namespace detail
#endif

// Reconstruction-quality sweep over the primary and secondary cutoffs, in
// exact-weights mode.  Cells land in per-cell JSON files, so an interrupted
// sweep resumes where it stopped.
inline SweepOutcome run_sweep_cutoff(const PipelineConfig& cfg, const std::vector<int>& n_max_list,
                                     const std::vector<int>& n_prime_list) {
  cfg.validate();
  if (n_max_list.empty()) throw ConfigError("sweep: empty n_max list");
  detail::ensure_dir(cfg.out_dir);
  const fs::path out(cfg.out_dir);

  std::vector<std::pair<int, int>> grid;
  for (int n : n_max_list) {
    if (n < 1) throw ConfigError("sweep: n_max must be >= 1");
    grid.emplace_back(n, n);
    for (int p : n_prime_list)
      if (p < n && p >= 1) grid.emplace_back(n, p);
  }

  SweepOutcome outcome;
  for (const auto& [n, p] : grid) {
    const fs::path cell_path =
        out / ("cell_n" + std::to_string(n) + "_p" + std::to_string(p) + ".json");
    SweepCell cell;
    if (fs::exists(cell_path)) {
      std::ifstream in(cell_path);
      Json j;
      in >> j;
      cell.n_max = j.value("n_max", n);
      cell.n_prime_max = j.value("n_prime_max", p);
      cell.fidelity = j.value("fidelity", 0.0);
      cell.iterations = j.value("iterations", 0);
      cell.converged = j.value("converged", false);
      cell.ok = j.value("ok", false);
      cell.error = j.value("error", "");
    } else {
      cell = detail::run_sweep_cell(cfg, n, p);
      Json j;
      j["n_max"] = cell.n_max;
      j["n_prime_max"] = cell.n_prime_max;
      j["fidelity"] = cell.fidelity;
      j["iterations"] = cell.iterations;
      j["converged"] = cell.converged;
      j["ok"] = cell.ok;
      j["error"] = cell.error;
      detail::write_atomically(cell_path, [&](const std::string& path) {
        std::ofstream cf(path);
        if (!cf) throw DataError("cannot open for writing: " + path);
        cf << j.dump(2) << "\n";
      });
    }
    outcome.cells.push_back(cell);
  }

  std::vector<std::vector<std::string>> rows;
  for (const auto& cell : outcome.cells)
    rows.push_back({std::to_string(cell.n_max), std::to_string(cell.n_prime_max),
                    format_double(cell.fidelity), std::to_string(cell.iterations),
                    cell.ok ? (cell.converged ? "converged" : "max-iters") : "failed"});
  outcome.table_path = (out / "sweep.tsv").string();
  save_table(outcome.table_path, {"n_max", "n_prime_max", "fidelity", "iterations", "status"},
             rows);

  // one curve per secondary cutoff rule
  std::vector<CurveSeries> series;
  CurveSeries matched{"n' = n", {}, {}};
  for (const auto& cell : outcome.cells)
    if (cell.ok && cell.n_prime_max == cell.n_max) {
      matched.xs.push_back(cell.n_max);
      matched.ys.push_back(cell.fidelity);
    }
  series.push_back(matched);
  for (int p : n_prime_list) {
    CurveSeries s{"n' = " + std::to_string(p), {}, {}};
    for (const auto& cell : outcome.cells)
      if (cell.ok && cell.n_prime_max == p && cell.n_max != p) {
        s.xs.push_back(cell.n_max);
        s.ys.push_back(cell.fidelity);
      }
    if (!s.xs.empty()) series.push_back(s);
  }
  outcome.figure_path = (out / "sweep.svg").string();
  save_curve_figure(outcome.figure_path, "worst-case fidelity vs n_max", series);
  return outcome;
}

// ---------------------------------------------------------------------------
// guideline
// ---------------------------------------------------------------------------

inline CutoffSuggestion run_guideline(double alpha_max, double n_samples) {
  return suggested_fock_cutoff(alpha_max, n_samples);
}

}  // namespace csqpt

#endif  // CSQPT_PIPELINE_HPP
