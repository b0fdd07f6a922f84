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
#include <optional>

namespace dmft {

// Uniform gradient-flow time grid t_k = k * dt, k = 0 .. T-1.
class TimeGrid {
 public:
  TimeGrid(int n_steps, double dt);

  int n_steps() const { return n_steps_; }
  double dt() const { return dt_; }
  double time(int k) const { return k * dt_; }
  double horizon() const { return (n_steps_ - 1) * dt_; }

  bool operator==(const TimeGrid& o) const { return n_steps_ == o.n_steps_ && dt_ == o.dt_; }

 private:
  int n_steps_;
  double dt_;
};

// Train samples come first (indices 0..P-1), test samples after them.
class SampleSet {
 public:
  // Gram built as (1/D) X X^T; rows of `inputs` are samples.
  static SampleSet from_inputs(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                               int n_train);
  static SampleSet from_gram(const Eigen::MatrixXd& gram, const Eigen::VectorXd& targets,
                             int n_train);

  int n_train() const { return n_train_; }
  int n_test() const { return static_cast<int>(gram_.rows()) - n_train_; }
  int n_total() const { return static_cast<int>(gram_.rows()); }
  const Eigen::MatrixXd& input_gram() const { return gram_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  // Raw inputs are only present when built from inputs; the reference network needs them.
  const std::optional<Eigen::MatrixXd>& inputs() const { return inputs_; }

 private:
  SampleSet(Eigen::MatrixXd gram, Eigen::VectorXd targets, int n_train,
            std::optional<Eigen::MatrixXd> inputs);

  Eigen::MatrixXd gram_;
  Eigen::VectorXd targets_;
  int n_train_;
  std::optional<Eigen::MatrixXd> inputs_;
};

}  // namespace dmft
