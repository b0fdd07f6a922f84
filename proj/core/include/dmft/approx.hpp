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
#include "dmft/saddle.hpp"
#include "dmft/static_kernels.hpp"

namespace dmft {

// Runs the saddle loop with A = B = 0 and no Jacobian propagation.
DmftState gradient_independence_solve(const DmftConfig& cfg, const SampleSet& data,
                                      const TimeGrid& grid,
                                      const DmftSolver::Observer& observer = {});

enum class PerturbativeQuadrature {
  // Euler Delta^0 and left-endpoint sums, consistent with the discrete solvers.
  discrete,
  // Delta^0 = exp(-(L+1) K^x t) y via eigendecomposition, fine trapezoid sums.
  exact,
};

struct PerturbationFunctions {
  Eigen::MatrixXd v;                // P x T, v_alpha(t_k)
  std::vector<Eigen::MatrixXd> vab; // per step, P x P, v_{alpha beta}(t_k)
  Eigen::MatrixXd delta0;           // P x T lazy error
};

PerturbationFunctions perturbation_functions(const Eigen::MatrixXd& kx_train,
                                             const Eigen::VectorXd& y, const TimeGrid& grid,
                                             int depth, PerturbativeQuadrature mode);

struct PerturbativeNtk {
  Kernel ntk;                     // (L+1) K^x + gamma0^2 * correction
  std::vector<Eigen::MatrixXd> h2;  // h2[l], l = 0..L: O(gamma0^2) coefficient of H^l (P'T x P'T)
  std::vector<Eigen::MatrixXd> g2;  // g2[l], l = 1..L+1: coefficient of G^l (T x T); g2[0] empty
  PerturbationFunctions functions;
  double coefficient = 0;         // sum_m m^2 (L+1-m)
};

// Deep linear network NTK to O(gamma0^2) around the lazy solution. kx covers
// train then test samples; y has one entry per train sample.
PerturbativeNtk perturbative_linear_ntk(const Eigen::MatrixXd& kx, const Eigen::VectorXd& y,
                                        const TimeGrid& grid, double gamma0, int depth,
                                        PerturbativeQuadrature mode = PerturbativeQuadrature::discrete);

}  // namespace dmft
