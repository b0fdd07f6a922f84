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
#include <string>
#include <vector>

#include "dmft/grid.hpp"

namespace dmft {

using IndexSet = std::vector<int>;

IndexSet iota_set(int n);

// Two-point function K_{mu alpha}(t, s) stored densely. Row (mu, k) lives at
// mu * T + k (sample-major, time-minor); columns likewise.
class Kernel {
 public:
  Kernel(Eigen::MatrixXd values, IndexSet row_samples, IndexSet col_samples, TimeGrid grid,
         std::string name = {});

  static Kernel zeros(int n_samples, const TimeGrid& grid, std::string name = {});
  // m (P' x P') repeated at every (t, s): m ⊗ 11^T.
  static Kernel constant_in_time(const Eigen::MatrixXd& m, const TimeGrid& grid,
                                 std::string name = {});

  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }
  const IndexSet& row_samples() const { return rows_; }
  const IndexSet& col_samples() const { return cols_; }
  const TimeGrid& grid() const { return grid_; }
  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  int n_row_samples() const { return static_cast<int>(rows_.size()); }
  int n_col_samples() const { return static_cast<int>(cols_.size()); }
  int n_steps() const { return grid_.n_steps(); }

  double at(int mu, int t, int alpha, int s) const {
    const int T = grid_.n_steps();
    return values_(mu * T + t, alpha * T + s);
  }
  // T x T block for the sample pair (mu, alpha).
  Eigen::MatrixXd sample_block(int mu, int alpha) const;
  // Sample x sample matrix at the time pair (t_k, t_j).
  Eigen::MatrixXd at_times(int k, int j) const;
  Eigen::MatrixXd equal_time(int k) const { return at_times(k, k); }

  void symmetrize();
  double asymmetry() const;

 private:
  Eigen::MatrixXd values_;
  IndexSet rows_;
  IndexSet cols_;
  TimeGrid grid_;
  std::string name_;
};

// Values indexed by (sample, time); row mu, column k.
class Trajectory {
 public:
  Trajectory(int n_samples, const TimeGrid& grid);
  Trajectory(Eigen::MatrixXd values, const TimeGrid& grid);

  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }
  const TimeGrid& grid() const { return grid_; }
  int n_samples() const { return static_cast<int>(values_.rows()); }
  double operator()(int mu, int k) const { return values_(mu, k); }
  double& operator()(int mu, int k) { return values_(mu, k); }

  // Flattened sample-major vector (mu * T + k).
  Eigen::VectorXd flatten() const;
  static Trajectory unflatten(const Eigen::VectorXd& v, int n_samples, const TimeGrid& grid);

 private:
  Eigen::MatrixXd values_;
  TimeGrid grid_;
};

// Permutations between sample-major (mu*T + k) and time-major (k*P + mu) flattening.
Eigen::MatrixXd to_time_major(const Eigen::MatrixXd& sample_major, int p_rows, int p_cols, int T);
Eigen::MatrixXd to_sample_major(const Eigen::MatrixXd& time_major, int p_rows, int p_cols, int T);

double relative_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& reference);

}  // namespace dmft
