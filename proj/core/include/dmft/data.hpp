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

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "dmft/grid.hpp"

namespace dmft {

enum class TargetRule { linear, sign, explicit_values };
enum class InputRule { gaussian, basis };

struct SyntheticData {
  int n_train = 10;
  int n_test = 0;
  int dim = 20;
  std::uint64_t seed = 0;
  InputRule inputs = InputRule::gaussian;  // basis: x_mu = sqrt(D) e_mu
  TargetRule target = TargetRule::linear;  // linear: y = beta.x / sqrt(D), sign: sign of that
  std::vector<double> y;                   // explicit targets
  bool whiten = false;
};

struct CsvData {
  std::filesystem::path inputs;   // rows = samples (train then test), columns = features
  std::filesystem::path targets;  // one value per train sample
  int n_test = 0;
  bool whiten = false;
};

struct GramData {
  std::filesystem::path gram;     // square CSV over train + test samples
  std::filesystem::path targets;
  int n_test = 0;
};

using DataSpec = std::variant<SyntheticData, CsvData, GramData>;

SampleSet load_data(const DataSpec& spec);

Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path);

// Returns inputs X' with (1/D) X' X'^T = I; needs a full-rank gram.
Eigen::MatrixXd whiten_inputs(const Eigen::MatrixXd& x);

}  // namespace dmft
