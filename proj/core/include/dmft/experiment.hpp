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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dmft/approx.hpp"
#include "dmft/data.hpp"
#include "dmft/grid.hpp"
#include "dmft/linear.hpp"
#include "dmft/saddle.hpp"

namespace dmft {

std::string_view version();

enum class Mode { dmft, linear, two_layer, static_kernels, grad_indep, perturb, nn_train, compare };

Mode parse_mode(std::string_view name);
std::string_view to_string(Mode m);

struct NnSettings {
  int width = 1000;
  std::optional<double> eta0;  // defaults to grid dt
  std::vector<std::uint64_t> seeds = {0};
  bool log_fields = true;
};

struct ExperimentConfig {
  Mode mode = Mode::dmft;
  TimeGrid grid{1, 1.0};
  std::optional<DataSpec> data;
  DmftConfig solver;
  LinearConfig linear;
  NnSettings nn;
  std::vector<double> perturb_gamma0s;
  PerturbativeQuadrature perturb_quadrature = PerturbativeQuadrature::discrete;
  std::optional<double> two_layer_y_norm;
  std::filesystem::path output_dir = "out";
  std::string config_json;  // canonical echo of the parsed file

  void validate() const;
};

// Relative paths inside the config resolve against base_dir.
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

// Applies command-line overrides and refreshes the config echo.
void override_seed(ExperimentConfig& cfg, std::uint64_t seed);

struct RunResult {
  int exit_code = 0;  // 0 ok, 2 flagged non-convergence
  std::string report_json;
  std::vector<std::filesystem::path> artifacts;
};

RunResult run(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace dmft
