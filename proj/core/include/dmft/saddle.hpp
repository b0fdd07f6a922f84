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
#include <functional>
#include <optional>
#include <vector>

#include "dmft/activation.hpp"
#include "dmft/grid.hpp"
#include "dmft/kernel.hpp"
#include "dmft/predictions.hpp"

namespace dmft {

// automatic: exact Gaussian moments for linear activation, sampling otherwise.
enum class MomentMode { automatic, monte_carlo };
// fixed: the same (layer, sample) substreams every outer iteration.
// fresh: new draws per iteration.
enum class RngStreams { fixed, fresh };

struct DmftConfig {
  int depth = 1;
  double gamma0 = 1.0;
  Activation activation = Activation::tanh;
  int n_mc = 2000;
  double beta = 0.6;
  double tol = 1e-3;
  int max_iters = 50;
  std::uint64_t seed = 0;
  double lambda_wd = 0.0;
  bool use_bias = false;
  LossKind loss = LossKind::mse;
  MomentMode moments = MomentMode::automatic;
  RngStreams rng_streams = RngStreams::fixed;
  // A = B = 0 and no Jacobian propagation.
  bool gradient_independence = false;
  int batch_size = 16;
  int n_quad = 80;
  // Solve on growing prefixes of the time grid, each warm-started from the
  // previous one. Causality makes the final fixed point the same; long horizons
  // with weight decay need it because a single Picard step from the lazy guess
  // overshoots.
  int time_segments = 1;

  void validate() const;
  bool lazy() const { return gamma0 < 1e-8; }
  bool analytic_moments() const {
    return moments == MomentMode::automatic && activation == Activation::linear;
  }
  // Prediction decay rate lambda * kappa, kappa = L + 1 for degree-1 homogeneous nets.
  double prediction_decay() const { return lambda_wd * (depth + 1); }
};

// Coefficients of one layer's forward recursion in time-major order
// (row k * P' + mu):
//   h[k] = s_k u[k] + sum_{j<k}  mh[k, j] g[j]
//   z[k] = s_k r[k] + sum_{j<=k} mz[k, j] phi(h[j])
// with s_k = exp(-lambda t_k).
struct LayerCoupling {
  int n_samples = 0;
  int n_steps = 0;
  double gamma0 = 0.0;
  double dt = 0.0;
  Eigen::MatrixXd mh;
  Eigen::MatrixXd mz;
  Eigen::VectorXd scale;
  int dim() const { return n_samples * n_steps; }
};

// Callers pass the plain Phi^{l-1}; the bias covariance 11^T is added here
// when cfg.use_bias is set.
LayerCoupling make_layer_coupling(const Kernel& phi_prev, const Kernel& g_next,
                                  const Kernel& a_prev, const Kernel& b_this,
                                  const Trajectory& delta, const DmftConfig& cfg);

struct FieldSample {
  Trajectory u, r, h, z, g, phi;
};

// Sample-major sensitivities, rows (mu, k) and columns (alpha, s).
struct FieldSensitivities {
  Eigen::MatrixXd dh_dr, dz_dr, dh_du, dz_du;
  // d phi(h) / dr and d g / du: the quantities averaged into A and B.
  Eigen::MatrixXd dphi_dr, dg_du;
};

FieldSample solve_fields(const LayerCoupling& c, const Trajectory& u, const Trajectory& r,
                         Activation act);
FieldSample solve_fields(const Trajectory& u, const Trajectory& r, const Kernel& phi_prev,
                         const Kernel& g_next, const Kernel& a_prev, const Kernel& b_this,
                         const Trajectory& delta, const DmftConfig& cfg);

FieldSensitivities propagate_jacobians(const LayerCoupling& c, const FieldSample& sample,
                                       Activation act);

struct KernelEstimate {
  Kernel phi;
  Kernel g;
  std::optional<Kernel> a;  // A^l from d phi / dr
  std::optional<Kernel> b;  // B^{l-1} from d g / du
};

// Plain averages over samples; A and B are only formed when sensitivities are
// given and gamma0 > 0 (densities: 1/(gamma0 dt S) sum).
KernelEstimate estimate_kernels(const std::vector<FieldSample>& samples,
                                const std::vector<FieldSensitivities>& sens, double gamma0);

struct IterationDiagnostics {
  int iteration = 0;
  double change_phi = 0, change_g = 0, change_a = 0, change_b = 0;
  double max_change = 0;
  double final_loss = 0;
  double ntk_trace = 0;
};

struct DmftState {
  DmftConfig config;
  TimeGrid grid;
  Eigen::MatrixXd kx;
  // Indexed by layer: phi[0..L], g[0..L+1] (g[0] unused, zero), a[0..L], b[0..L].
  std::vector<Kernel> phi, g, a, b;
  Trajectory f, delta;
  Eigen::VectorXd loss;
  int iterations = 0;
  bool converged = false;
  std::vector<IterationDiagnostics> diagnostics;

  int depth() const { return config.depth; }
  Kernel ntk() const;
  std::vector<Eigen::MatrixXd> ntk_diagonal() const;
};

class DmftSolver {
 public:
  using Observer = std::function<void(const IterationDiagnostics&)>;

  DmftSolver(DmftConfig cfg, const SampleSet& data, const TimeGrid& grid);

  // Replaces the kernels by those of a solution on a prefix of this grid;
  // times past its horizon hold the last available value.
  void warm_start(const DmftState& prefix);

  const DmftState& state() const { return state_; }
  DmftState take_state() { return std::move(state_); }

  // One outer iteration: estimate all layers from the current kernels, apply the
  // damped update, refresh predictions. Returns the maximum relative change.
  double step();
  // Iterates until tol or max_iters.
  void run(const Observer& observer = {});

  // Estimates of layer l (1..L) from the current state. With keep_samples the
  // individual Monte-Carlo samples and their sensitivities are returned too.
  struct LayerEstimate {
    KernelEstimate estimate;
    std::vector<FieldSample> samples;
    std::vector<FieldSensitivities> sensitivities;
  };
  LayerEstimate estimate_layer(int layer, bool keep_samples = false) const;

 private:
  void refresh_predictions();

  DmftState state_;
  SampleSet data_;
};

DmftState dmft_solve(const DmftConfig& cfg, const SampleSet& data, const TimeGrid& grid,
                     const DmftSolver::Observer& observer = {});

struct RepresenterReport {
  Eigen::VectorXd f_dmft;        // predictions at the final time (test, or train if no test)
  Eigen::VectorXd f_regression;  // k(x)^T [K + lambda kappa I]^{-1} y with the final NTK
  double max_abs_deviation = 0;
  double relative_deviation = 0;
};

RepresenterReport representer_check(const DmftState& state, const SampleSet& data,
                                    double lambda_wd, double kappa);

}  // namespace dmft
