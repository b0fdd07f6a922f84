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

#include "dmft/kernel.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "dmft/error.hpp"

namespace dmft {

IndexSet iota_set(int n) {
  IndexSet s(n);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

Kernel::Kernel(Eigen::MatrixXd values, IndexSet row_samples, IndexSet col_samples, TimeGrid grid,
               std::string name)
    : values_(std::move(values)), rows_(std::move(row_samples)), cols_(std::move(col_samples)),
      grid_(grid), name_(std::move(name)) {
  const auto T = grid_.n_steps();
  require(values_.rows() == static_cast<Eigen::Index>(rows_.size()) * T &&
              values_.cols() == static_cast<Eigen::Index>(cols_.size()) * T,
          ErrorKind::ShapeMismatch,
          "kernel values " + std::to_string(values_.rows()) + "x" + std::to_string(values_.cols()) +
              " do not match index sets " + std::to_string(rows_.size()) + "x" +
              std::to_string(cols_.size()) + " with T=" + std::to_string(T));
}

Kernel Kernel::zeros(int n_samples, const TimeGrid& grid, std::string name) {
  const int n = n_samples * grid.n_steps();
  return Kernel(Eigen::MatrixXd::Zero(n, n), iota_set(n_samples), iota_set(n_samples), grid,
                std::move(name));
}

Kernel Kernel::constant_in_time(const Eigen::MatrixXd& m, const TimeGrid& grid, std::string name) {
  const int T = grid.n_steps();
  Eigen::MatrixXd v(m.rows() * T, m.cols() * T);
  for (Eigen::Index mu = 0; mu < m.rows(); ++mu)
    for (Eigen::Index a = 0; a < m.cols(); ++a) v.block(mu * T, a * T, T, T).setConstant(m(mu, a));
  return Kernel(std::move(v), iota_set(static_cast<int>(m.rows())),
                iota_set(static_cast<int>(m.cols())), grid, std::move(name));
}

Eigen::MatrixXd Kernel::sample_block(int mu, int alpha) const {
  const int T = grid_.n_steps();
  return values_.block(mu * T, alpha * T, T, T);
}

Eigen::MatrixXd Kernel::at_times(int k, int j) const {
  const int T = grid_.n_steps();
  Eigen::MatrixXd m(n_row_samples(), n_col_samples());
  for (int mu = 0; mu < n_row_samples(); ++mu)
    for (int a = 0; a < n_col_samples(); ++a) m(mu, a) = values_(mu * T + k, a * T + j);
  return m;
}

void Kernel::symmetrize() {
  require(values_.rows() == values_.cols(), ErrorKind::ShapeMismatch,
          "only square kernels can be symmetrized");
  values_ = 0.5 * (values_ + values_.transpose()).eval();
}

double Kernel::asymmetry() const {
  const double n = values_.norm();
  return n == 0 ? 0.0 : (values_ - values_.transpose()).norm() / n;
}

Trajectory::Trajectory(int n_samples, const TimeGrid& grid)
    : values_(Eigen::MatrixXd::Zero(n_samples, grid.n_steps())), grid_(grid) {}

Trajectory::Trajectory(Eigen::MatrixXd values, const TimeGrid& grid)
    : values_(std::move(values)), grid_(grid) {
  require(values_.cols() == grid_.n_steps(), ErrorKind::ShapeMismatch,
          "trajectory has " + std::to_string(values_.cols()) + " time points, grid has " +
              std::to_string(grid_.n_steps()));
}

Eigen::VectorXd Trajectory::flatten() const {
  // Row-major copy gives mu * T + k ordering.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = values_;
  return Eigen::Map<const Eigen::VectorXd>(rm.data(), rm.size());
}

Trajectory Trajectory::unflatten(const Eigen::VectorXd& v, int n_samples, const TimeGrid& grid) {
  require(v.size() == static_cast<Eigen::Index>(n_samples) * grid.n_steps(),
          ErrorKind::ShapeMismatch, "flattened trajectory has wrong length");
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      v.data(), n_samples, grid.n_steps());
  return Trajectory(Eigen::MatrixXd(m), grid);
}

namespace {

std::vector<Eigen::Index> sample_to_time_perm(int p, int T) {
  // perm[time-major index] = sample-major index
  std::vector<Eigen::Index> perm(static_cast<size_t>(p) * T);
  for (int k = 0; k < T; ++k)
    for (int mu = 0; mu < p; ++mu) perm[k * p + mu] = mu * T + k;
  return perm;
}

}  // namespace

Eigen::MatrixXd to_time_major(const Eigen::MatrixXd& sm, int p_rows, int p_cols, int T) {
  require(sm.rows() == static_cast<Eigen::Index>(p_rows) * T &&
              sm.cols() == static_cast<Eigen::Index>(p_cols) * T,
          ErrorKind::ShapeMismatch, "to_time_major: shape mismatch");
  const auto pr = sample_to_time_perm(p_rows, T);
  const auto pc = sample_to_time_perm(p_cols, T);
  Eigen::MatrixXd out(sm.rows(), sm.cols());
  for (Eigen::Index j = 0; j < out.cols(); ++j)
    for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = sm(pr[i], pc[j]);
  return out;
}

Eigen::MatrixXd to_sample_major(const Eigen::MatrixXd& tm, int p_rows, int p_cols, int T) {
  require(tm.rows() == static_cast<Eigen::Index>(p_rows) * T &&
              tm.cols() == static_cast<Eigen::Index>(p_cols) * T,
          ErrorKind::ShapeMismatch, "to_sample_major: shape mismatch");
  const auto pr = sample_to_time_perm(p_rows, T);
  const auto pc = sample_to_time_perm(p_cols, T);
  Eigen::MatrixXd out(tm.rows(), tm.cols());
  for (Eigen::Index j = 0; j < tm.cols(); ++j)
    for (Eigen::Index i = 0; i < tm.rows(); ++i) out(pr[i], pc[j]) = tm(i, j);
  return out;
}

double relative_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& reference) {
  require(a.rows() == reference.rows() && a.cols() == reference.cols(), ErrorKind::ShapeMismatch,
          "relative_frobenius: shape mismatch");
  const double denom = reference.norm();
  return denom > 0 ? (a - reference).norm() / denom : (a.norm() > 0 ? std::numeric_limits<double>::infinity() : 0.0);
}

}  // namespace dmft
