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

#include "dmft/activation.hpp"
#include "dmft/kernel.hpp"

namespace dmft {

// Time-independent (lazy limit) kernels. Vectors are indexed by layer number:
// phi[0..L] with phi[0] = K^x, phidot[1..L], g[1..L+1] with g[L+1] = 1.
struct StaticKernels {
  std::vector<Eigen::MatrixXd> phi;
  std::vector<Eigen::MatrixXd> phidot;
  std::vector<Eigen::MatrixXd> g;
  Eigen::MatrixXd ntk;
  int depth() const { return static_cast<int>(phi.size()) - 1; }
};

StaticKernels static_kernels(Activation act, const Eigen::MatrixXd& kx, int depth, int n_quad = 80,
                             bool bias = false);

// Probabilists' Gauss-Hermite rule: sum_i w_i f(x_i) ≈ E[f(z)], z ~ N(0, 1).
struct GaussHermiteRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};
GaussHermiteRule gauss_hermite(int n);

// E[a(u) b(v)] for (u, v) ~ N(0, [[s11, s12], [s12, s22]]) on a tensor GH rule.
double bivariate_expectation(double (*a)(Activation, double), double (*b)(Activation, double),
                             Activation act, double s11, double s12, double s22,
                             const GaussHermiteRule& rule);

}  // namespace dmft
