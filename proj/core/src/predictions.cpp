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

#include "dmft/predictions.hpp"

#include <cmath>
#include <string>

#include "dmft/error.hpp"

namespace dmft {

LossKind parse_loss(std::string_view name) {
  if (name == "mse") return LossKind::mse;
  if (name == "logistic") return LossKind::logistic;
  fail(ErrorKind::InvalidConfig, "unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(LossKind kind) { return kind == LossKind::mse ? "mse" : "logistic"; }

Eigen::VectorXd loss_residual(LossKind kind, const Eigen::VectorXd& f, const Eigen::VectorXd& y) {
  if (kind == LossKind::mse) return y - f;
  // logistic with labels in {-1, +1}: Delta = y * sigmoid(-y f)
  Eigen::VectorXd d(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) d[i] = y[i] / (1.0 + std::exp(y[i] * f[i]));
  return d;
}

double loss_value(LossKind kind, const Eigen::VectorXd& f, const Eigen::VectorXd& y) {
  if (kind == LossKind::mse) return 0.5 * (f - y).squaredNorm();
  double s = 0;
  for (Eigen::Index i = 0; i < f.size(); ++i) s += std::log1p(std::exp(-y[i] * f[i]));
  return s;
}

namespace {

void check_layers(const std::vector<Kernel>& phis, const std::vector<Kernel>& gs,
                  const Eigen::MatrixXd& kx) {
  require(!phis.empty() && phis.size() == gs.size(), ErrorKind::ShapeMismatch,
          "ntk needs Phi^1..Phi^L and G^1..G^L");
  const auto& ref = phis.front();
  for (const auto* list : {&phis, &gs})
    for (const auto& k : *list)
      require(k.values().rows() == ref.values().rows() && k.values().cols() == ref.values().cols() &&
                  k.grid() == ref.grid(),
              ErrorKind::ShapeMismatch, "ntk kernels live on different index spaces");
  require(kx.rows() == ref.n_row_samples() && kx.cols() == ref.n_col_samples(),
          ErrorKind::ShapeMismatch, "input gram does not match kernel samples");
}

}  // namespace

Kernel ntk_assemble(const std::vector<Kernel>& phis, const std::vector<Kernel>& gs,
                    const Eigen::MatrixXd& kx, bool bias) {
  check_layers(phis, gs, kx);
  const size_t L = phis.size();
  const auto& grid = phis.front().grid();
  const Kernel base = Kernel::constant_in_time(kx, grid);
  Eigen::MatrixXd k = phis[L - 1].values();
  k += gs[0].values().cwiseProduct(base.values());
  for (size_t l = 1; l < L; ++l) k += gs[l].values().cwiseProduct(phis[l - 1].values());
  if (bias)
    for (size_t l = 0; l < L; ++l) k += gs[l].values();
  return Kernel(std::move(k), phis.front().row_samples(), phis.front().col_samples(), grid, "ntk");
}

std::vector<Eigen::MatrixXd> ntk_equal_time(const std::vector<Kernel>& phis,
                                            const std::vector<Kernel>& gs,
                                            const Eigen::MatrixXd& kx, bool bias) {
  check_layers(phis, gs, kx);
  const size_t L = phis.size();
  const int T = phis.front().n_steps();
  std::vector<Eigen::MatrixXd> out(T);
  for (int k = 0; k < T; ++k) {
    Eigen::MatrixXd m = phis[L - 1].equal_time(k);
    m += gs[0].equal_time(k).cwiseProduct(kx);
    for (size_t l = 1; l < L; ++l) m += gs[l].equal_time(k).cwiseProduct(phis[l - 1].equal_time(k));
    if (bias)
      for (size_t l = 0; l < L; ++l) m += gs[l].equal_time(k);
    out[k] = std::move(m);
  }
  return out;
}

Predictions integrate_predictions(const std::vector<Eigen::MatrixXd>& ntk_diag,
                                  const Eigen::VectorXd& targets, int n_train, LossKind loss,
                                  const TimeGrid& grid, double decay) {
  const int T = grid.n_steps();
  require(n_train == targets.size(), ErrorKind::DimensionMismatch, "targets/n_train mismatch");
  require(static_cast<int>(ntk_diag.size()) >= T - 1, ErrorKind::ShapeMismatch,
          "need an NTK matrix for every step but the last");
  const int P = n_train;
  const int Pt = ntk_diag.empty() ? P : static_cast<int>(ntk_diag.front().rows());
  require(Pt >= P, ErrorKind::ShapeMismatch, "NTK smaller than the train set");

  Predictions out{Trajectory(Pt, grid), Trajectory(P, grid), Eigen::VectorXd(T)};
  Eigen::VectorXd f = Eigen::VectorXd::Zero(Pt);
  const double dt = grid.dt();
  for (int k = 0; k < T; ++k) {
    const Eigen::VectorXd ftr = f.head(P);
    const Eigen::VectorXd d = loss_residual(loss, ftr, targets);
    out.f.values().col(k) = f;
    out.delta.values().col(k) = d;
    out.loss[k] = loss_value(loss, ftr, targets);
    if (k + 1 < T) {
      const auto& K = ntk_diag[k];
      require(K.rows() == Pt && K.cols() == Pt, ErrorKind::ShapeMismatch, "NTK size changes in time");
      f += dt * (K.leftCols(P) * d - decay * f);
      if (!f.allFinite())
        fail(ErrorKind::NonFiniteValue,
             "predictions diverged at step " + std::to_string(k + 1) + " (reduce dt)");
    }
  }
  return out;
}

double alignment(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::ShapeMismatch,
          "alignment of differently shaped matrices");
  const double na = a.norm(), nb = b.norm();
  require(na > 0 && nb > 0, ErrorKind::ZeroNorm, "alignment with a zero matrix");
  return a.cwiseProduct(b).sum() / (na * nb);
}

double alignment(const Kernel& a, const Kernel& b) { return alignment(a.values(), b.values()); }

}  // namespace dmft
