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
#include <string_view>
#include <vector>

#include "dmft/kernel.hpp"

namespace dmft {

enum class LossKind { mse, logistic };

LossKind parse_loss(std::string_view name);
std::string_view to_string(LossKind kind);

// Delta = -dloss/df for train predictions f and targets y.
Eigen::VectorXd loss_residual(LossKind kind, const Eigen::VectorXd& f, const Eigen::VectorXd& y);
double loss_value(LossKind kind, const Eigen::VectorXd& f, const Eigen::VectorXd& y);

// K = sum_{l=0}^{L} G^{l+1} ⊙ Phi^l with Phi^0 = K^x ⊗ 11^T and G^{L+1} = 1.
// phis = Phi^1..Phi^L, gs = G^1..G^L. With a trainable bias the extra
// sum_{l=1}^{L} G^l appears (bias gradients are g^{l}/gamma).
Kernel ntk_assemble(const std::vector<Kernel>& phis, const std::vector<Kernel>& gs,
                    const Eigen::MatrixXd& kx, bool bias = false);

// Same sum evaluated only on the equal-time diagonal: one P' x P' matrix per step.
std::vector<Eigen::MatrixXd> ntk_equal_time(const std::vector<Kernel>& phis,
                                            const std::vector<Kernel>& gs,
                                            const Eigen::MatrixXd& kx, bool bias = false);

struct Predictions {
  Trajectory f;       // all samples (train then test)
  Trajectory delta;   // train samples only
  Eigen::VectorXd loss;  // loss at every grid point
};

// Forward Euler of df/dt = K(t,t) Delta - decay * f with f(0) = 0.
// ntk_diag[k] is the P' x P' NTK at t_k (entries k = 0 .. T-2 are used).
Predictions integrate_predictions(const std::vector<Eigen::MatrixXd>& ntk_diag,
                                  const Eigen::VectorXd& targets, int n_train, LossKind loss,
                                  const TimeGrid& grid, double decay = 0.0);

double alignment(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
double alignment(const Kernel& a, const Kernel& b);

}  // namespace dmft
