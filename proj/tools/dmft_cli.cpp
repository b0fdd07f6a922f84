// Copyright 2026 The dmft Authors
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

// dmft solve --config run.json [--out dir] [--seed n] [--threads k] [--dry-run]
//
// Exit status: 0 ok, 2 solver did not converge, 1 anything else.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "dmft/error.hpp"
#include "dmft/experiment.hpp"
#include "dmft/parallel.hpp"

namespace {

int env_threads() {
  const char* v = std::getenv("DMFT_THREADS");
  if (!v || !*v) return 0;
  try {
    return std::stoi(v);
  } catch (const std::exception&) {
    std::cerr << "warning: ignoring DMFT_THREADS='" << v << "'\n";
    return 0;
  }
}

int solve(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed,
          int threads, bool dry_run) {
  dmft::ExperimentConfig cfg = dmft::load_config(config_path);
  if (!out.empty()) cfg.output_dir = out;
  if (seed) dmft::override_seed(cfg, *seed);
  if (threads <= 0) threads = env_threads();
  if (threads > 0) dmft::set_thread_count(threads);

  if (dry_run) {
    std::cout << "config ok: mode " << dmft::to_string(cfg.mode) << ", T=" << cfg.grid.n_steps()
              << ", dt=" << cfg.grid.dt() << ", output " << cfg.output_dir.string() << '\n';
    return 0;
  }
  const dmft::RunResult r = dmft::run(cfg);
  for (const auto& p : r.artifacts) std::cout << "wrote " << p.string() << '\n';
  if (r.exit_code == 2) std::cerr << "solver did not reach tolerance; results flagged in report.json\n";
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamical mean field solver for infinite-width networks"};
  app.set_version_flag("--version", std::string(dmft::version()));
  app.require_subcommand(1);

  auto* cmd = app.add_subcommand("solve", "Run one experiment described by a JSON config");
  std::string config_path, out;
  std::uint64_t seed_value = 0;
  int threads = 0;
  bool dry_run = false;
  cmd->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", out, "Output directory (overrides the config)");
  auto* seed_opt = cmd->add_option("--seed", seed_value, "Base seed for solver and network draws");
  cmd->add_option("--threads", threads, "Worker threads (default: DMFT_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_flag("--dry-run", dry_run, "Validate the config and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    std::optional<std::uint64_t> seed;
    if (seed_opt->count()) seed = seed_value;
    return solve(config_path, out, seed, threads, dry_run);
  } catch (const dmft::Error& e) {
    std::cerr << "error [" << dmft::to_string(e.kind()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
