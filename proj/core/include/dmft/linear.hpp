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
#include <vector>

#include "dmft/grid.hpp"
#include "dmft/kernel.hpp"
#include "dmft/predictions.hpp"

namespace dmft {

struct LinearConfig {
  int depth = 1;
  double gamma0 = 1.0;
  double beta = 0.6;
  double tol = 1e-11;
  int max_iters = 500;
  LossKind loss = LossKind::mse;
  void validate() const;
};

// Causal operators of one layer (sample-major rows (mu, t)):
//   C (P'T x T):  dt [A^{l-1}_mu(t,s) + [s<t] sum_a H^{l-1}_{mu a}(t,s) Delta_a(s)]
//   D (T x P'T):  dt [B^l_a(t,s)      + [s<t] G^{l+1}(t,s) Delta_a(s)]
struct LinearOperators {
  Eigen::MatrixXd C;
  Eigen::MatrixXd D;
};

struct LinearDmftState {
  LinearConfig config;
  TimeGrid grid;
  Eigen::MatrixXd kx;
  // Indexed by layer: h[0..L] (P'T x P'T), g[1..L+1] (T x T, g[0] empty),
  // a[0..L] (P'T x T), b[0..L] (T x P'T). A and B are densities (per unit time).
  std::vector<Eigen::MatrixXd> h, g, a, b;
  Trajectory f, delta;
  Eigen::VectorXd loss;
  int iterations = 0;
  bool converged = false;
  std::vector<double> changes;

  int depth() const { return config.depth; }
  int n_samples() const { return static_cast<int>(kx.rows()); }
  // Full (P'T x P'T) kernels in the shared format.
  Kernel h_kernel(int l) const;
  Kernel g_kernel(int l) const;
  Kernel ntk() const;
  std::vector<Eigen::MatrixXd> ntk_diagonal() const;
};

LinearOperators build_linear_operators(const LinearDmftState& st, int layer);

LinearDmftState linear_solve(const LinearConfig& cfg, const SampleSet& data, const TimeGrid& grid);

struct TwoLayerWhitened {
  Eigen::VectorXd delta;  // error norm along y
  Eigen::VectorXd h_y;    // y^T H y / |y|^2
};

// Integrates (H_y, Delta) jointly with RK4 on a fine internal step, so the
// conservation law H_y^2 - gamma0^2 (y - Delta)^2 = 1 is a genuine check.
TwoLayerWhitened two_layer_whitened(double gamma0, double y_norm, const TimeGrid& grid);

struct TwoLayerGeneral {
  std::vector<Eigen::MatrixXd> h;  // P x P per step
  Eigen::VectorXd g;
  Eigen::MatrixXd delta;  // P x T
};

// H(0) = K^x (= I for whitened inputs), G(0) = 1, Delta(0) = y.
TwoLayerGeneral two_layer_general(double gamma0, const Eigen::MatrixXd& kx,
                                  const Eigen::VectorXd& y, const TimeGrid& grid);

}  // namespace dmft
