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

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <catch2/catch_amalgamated.hpp>

#include "csqpt/pipeline.hpp"
#include "helpers.hpp"

using namespace csqpt;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("csqpt_pipe_test_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

PipelineConfig tiny_identity_config(const std::string& out_dir) {
  PipelineConfig cfg;
  cfg.model = ProcessModel::identity();
  cfg.alpha_max = 0.6;
  cfg.probe_count = 3;
  cfg.n_per_probe = 4000;
  cfg.bins = BinGrid::with_counts(32, 64);
  cfg.n_max = 2;
  cfg.mle.max_iters = 1500;
  cfg.mle.ll_rel_tol = 1e-8;
  cfg.metrics.walk_steps = 2000;
  cfg.metrics.restarts = 2;
  cfg.seed = 12;
  cfg.out_dir = out_dir;
  cfg.mle.dim_in = cfg.dim();
  cfg.mle.dim_out_physical = cfg.dim();
  return cfg;
}

std::string file_contents(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CSQPT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("simulate-reconstruct-evaluate round trip", "[pipeline]") {
  TempDir dir;
  PipelineConfig cfg = tiny_identity_config(dir.file("out"));

  const auto sim = run_simulate(cfg);
  CHECK_FALSE(sim.exact);
  CHECK(fs::exists(sim.path));
  REQUIRE(sim.g.size() == 3);
  for (double g : sim.g) CHECK(g == 1.0);

  const auto rec = run_reconstruct(cfg, sim.path);
  CHECK(rec.report.converged);
  CHECK(rec.report.final_trace_defect <= 1e-8);
  CHECK(rec.report.min_min_eigenvalue >= -1e-8);
  CHECK(fs::exists(rec.tensor_path));
  CHECK(fs::exists(rec.loglik_path));
  CHECK(fs::exists(rec.report_path));
  const ProcessTensor est = load_tensor(rec.tensor_path);
  CHECK(est.dim_in == 3);
  CHECK_FALSE(est.heralded);

  const auto eval = run_evaluate(cfg, rec.tensor_path);
  CHECK(eval.worst_case >= 0.97);
  CHECK(eval.max_abs_diag_error <= 0.1);
  CHECK(fs::exists(eval.diag_table_path));
  CHECK(fs::exists(eval.metrics_path));
  CHECK(fs::exists(eval.figure_path));
  const std::string svg = file_contents(eval.figure_path);
  CHECK(svg.find("<svg") != std::string::npos);
}

TEST_CASE("exact weights feed the same reconstruction entry point", "[pipeline]") {
  TempDir dir;
  PipelineConfig cfg = tiny_identity_config(dir.file("out"));
  cfg.exact_weights = true;
  cfg.sim_dim_margin = 0;  // matched cutoffs: reconstruction sees its own model
  const auto sim = run_simulate(cfg);
  CHECK(sim.exact);
  CHECK(fs::exists(sim.path));
  CHECK(file_is_histogram(sim.path));

  cfg.mle.ll_rel_tol = 1e-10;
  cfg.mle.max_iters = 8000;
  const auto rec = run_reconstruct(cfg, sim.path);
  CHECK(rec.report.converged);
  const ProcessTensor truth = reference_tensor(ProcessModel::identity(), 3, 3);
  CHECK((load_tensor(rec.tensor_path).op - truth.op).cwiseAbs().maxCoeff() <= 5e-3);
}

TEST_CASE("heralded estimates also land in a physical tensor file", "[pipeline]") {
  TempDir dir;
  PipelineConfig cfg = tiny_identity_config(dir.file("out"));
  cfg.model = ProcessModel::photon_creation(0.1);
  cfg.n_per_probe = 3000;
  cfg.mle.max_iters = 800;
  cfg.mle.ll_rel_tol = 1e-7;
  const auto sim = run_simulate(cfg);
  const auto rec = run_reconstruct(cfg, sim.path);
  REQUIRE_FALSE(rec.physical_tensor_path.empty());
  const ProcessTensor phys = load_tensor(rec.physical_tensor_path);
  CHECK_FALSE(phys.heralded);
  CHECK(phys.dim_out == 3);
  const ProcessTensor full = load_tensor(rec.tensor_path);
  CHECK(full.heralded);
  CHECK(full.dim_out == 4);
}

TEST_CASE("cutoff sweep runs, tabulates and resumes", "[pipeline]") {
  TempDir dir;
  PipelineConfig cfg;
  cfg.model = ProcessModel::photon_creation(0.1);
  cfg.alpha_max = 0.5;
  cfg.probe_count = 3;
  cfg.n_per_probe = 2000;
  cfg.bins = BinGrid::with_counts(32, 64);
  cfg.mle.max_iters = 250;
  cfg.mle.ll_rel_tol = 1e-7;
  cfg.metrics.walk_steps = 1500;
  cfg.metrics.restarts = 2;
  cfg.out_dir = dir.file("sweep");
  cfg.exact_weights = true;

  // pre-seed one cell to prove the sweep trusts existing per-cell files
  fs::create_directories(cfg.out_dir);
  {
    std::ofstream cell(dir.file("sweep") + "/cell_n2_p2.json");
    cell << R"({"n_max":2,"n_prime_max":2,"fidelity":0.123,"iterations":1,)"
         << R"("converged":true,"ok":true,"error":""})" << "\n";
  }

  const auto outcome = run_sweep_cutoff(cfg, {2, 3}, {2});
  REQUIRE(outcome.cells.size() == 3);  // (2,2) (3,3) (3,2)
  CHECK(outcome.cells[0].fidelity == Catch::Approx(0.123));
  for (const auto& cell : outcome.cells) CHECK(cell.ok);
  CHECK(outcome.cells[1].fidelity > 0.5);
  CHECK(fs::exists(outcome.table_path));
  CHECK(fs::exists(outcome.figure_path));
  CHECK(fs::exists(dir.file("sweep") + "/cell_n3_p2.json"));
}

TEST_CASE("command-line binary", "[pipeline][cli]") {
  TempDir dir;
  SECTION("guideline prints the suggestion and exits cleanly") {
    CHECK(run_cli("guideline 0.6 474000") == 0);
  }
  SECTION("bad flags and bad configs exit with the config code") {
    CHECK(run_cli("--no-such-flag") == 2);
    CHECK(run_cli("simulate --config /nonexistent.json") == 2);
    const std::string bad = dir.file("bad.json");
    std::ofstream(bad) << R"({"model": {"kind": "nope"}})";
    CHECK(run_cli("simulate --config " + bad) == 2);
  }
  SECTION("missing data files exit with the data code") {
    CHECK(run_cli("reconstruct /does/not/exist.dataset --out " + dir.file("o")) == 3);
    CHECK(run_cli("evaluate /does/not/exist.tensor --out " + dir.file("o")) == 3);
  }
  SECTION("full pipeline through the binary, deterministic outputs") {
    const std::string cfg_path = dir.file("cfg.json");
    PipelineConfig cfg = tiny_identity_config(dir.file("out"));
    save_config(cfg_path, cfg);
    REQUIRE(run_cli("simulate --config " + cfg_path) == 0);
    const std::string first = file_contents(dir.file("out") + "/samples.dataset");

    // identical seed, identical bytes
    PipelineConfig cfg2 = cfg;
    cfg2.out_dir = dir.file("out2");
    const std::string cfg2_path = dir.file("cfg2.json");
    save_config(cfg2_path, cfg2);
    REQUIRE(run_cli("simulate --config " + cfg2_path) == 0);
    CHECK(file_contents(dir.file("out2") + "/samples.dataset") == first);

    REQUIRE(run_cli("reconstruct --config " + cfg_path + " " + dir.file("out") +
                    "/samples.dataset") == 0);
    CHECK(run_cli("evaluate --config " + cfg_path + " " + dir.file("out") +
                  "/estimate.tensor") == 0);
  }
  SECTION("iteration cap maps to the non-convergence exit code") {
    const std::string cfg_path = dir.file("cfg.json");
    PipelineConfig cfg = tiny_identity_config(dir.file("out"));
    cfg.mle.max_iters = 3;
    save_config(cfg_path, cfg);
    REQUIRE(run_cli("simulate --config " + cfg_path) == 0);
    CHECK(run_cli("reconstruct --config " + cfg_path + " " + dir.file("out") +
                  "/samples.dataset") == 4);
    CHECK(fs::exists(dir.file("out") + "/estimate.tensor"));  // partial result kept
  }
  SECTION("exact flag writes a histogram") {
    const std::string cfg_path = dir.file("cfg.json");
    const PipelineConfig cfg = tiny_identity_config(dir.file("oute"));
    save_config(cfg_path, cfg);
    REQUIRE(run_cli("simulate --exact --config " + cfg_path) == 0);
    CHECK(file_is_histogram(dir.file("oute") + "/weights.histogram"));
  }
}
