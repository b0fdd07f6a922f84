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

#include "dmft/grid.hpp"

#include <cmath>
#include <string>

#include "dmft/error.hpp"

namespace dmft {

TimeGrid::TimeGrid(int n_steps, double dt) : n_steps_(n_steps), dt_(dt) {
  require(n_steps >= 1, ErrorKind::InvalidConfig, "time grid needs T >= 1");
  require(dt > 0 && std::isfinite(dt), ErrorKind::InvalidConfig, "time grid needs dt > 0");
}

SampleSet::SampleSet(Eigen::MatrixXd gram, Eigen::VectorXd targets, int n_train,
                     std::optional<Eigen::MatrixXd> inputs)
    : gram_(std::move(gram)), targets_(std::move(targets)), n_train_(n_train),
      inputs_(std::move(inputs)) {
  require(gram_.rows() == gram_.cols(), ErrorKind::ShapeMismatch, "input gram must be square");
  require(n_train_ >= 1 && n_train_ <= gram_.rows(), ErrorKind::DimensionMismatch,
          "n_train must lie in [1, n_samples]");
  require(targets_.size() == n_train_, ErrorKind::DimensionMismatch,
          "expected one target per train sample, got " + std::to_string(targets_.size()) +
              " for " + std::to_string(n_train_));
  require(gram_.allFinite() && targets_.allFinite(), ErrorKind::NonFiniteValue,
          "non-finite entries in data");
}

SampleSet SampleSet::from_inputs(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                                 int n_train) {
  require(inputs.cols() >= 1, ErrorKind::DimensionMismatch, "inputs need at least one feature");
  Eigen::MatrixXd gram = inputs * inputs.transpose() / static_cast<double>(inputs.cols());
  gram = 0.5 * (gram + gram.transpose()).eval();
  return SampleSet(std::move(gram), targets, n_train, inputs);
}

SampleSet SampleSet::from_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& targets,
                               int n_train) {
  require(gram.rows() == gram.cols(), ErrorKind::ShapeMismatch, "input gram must be square");
  const double asym = (gram - gram.transpose()).norm();
  require(asym <= 1e-12 * std::max(1.0, gram.norm()), ErrorKind::NonPsdGram,
          "input gram is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() >= -1e-10, ErrorKind::NonPsdGram,
          "input gram has eigenvalue " + std::to_string(es.eigenvalues().minCoeff()));
  return SampleSet(gram, targets, n_train, std::nullopt);
}

}  // namespace dmft
