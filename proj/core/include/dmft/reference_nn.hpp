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
#include <vector>

#include "dmft/activation.hpp"
#include "dmft/grid.hpp"
#include "dmft/kernel.hpp"
#include "dmft/predictions.hpp"

namespace dmft {

struct NetworkConfig {
  int width = 1000;
  int depth = 1;
  double gamma0 = 1.0;
  Activation activation = Activation::tanh;
  bool bias = false;
  double lambda_wd = 0.0;
};

// Mean-field parameterized MLP:
//   h^1 = W^0 x / sqrt(D) (+ b^0), h^{l+1} = W^l phi(h^l) / sqrt(N) (+ b^l),
//   f = w^L . phi(h^L) / (gamma sqrt(N)), gamma = gamma0 sqrt(N).
class Mlp {
 public:
  Mlp(const NetworkConfig& cfg, int input_dim, std::uint64_t seed);

  struct Pass {
    std::vector<Eigen::MatrixXd> h;    // h[l], l = 1..L, N x P' (h[0] unused)
    std::vector<Eigen::MatrixXd> phi;  // phi(h[l])
    std::vector<Eigen::MatrixXd> g;    // g[l] = gamma sqrt(N) df/dh^l
    Eigen::VectorXd f;
  };
  // Rows of x are samples.
  Pass forward(const Eigen::MatrixXd& x) const;
  void backward(Pass& pass) const;

  // One gradient-descent step of size eta0 on the train loss (first n_train
  // rows of x): theta += eta0 (-gamma^2 grad loss - lambda theta).
  void gd_step(const Eigen::MatrixXd& x, const Pass& pass, const Eigen::VectorXd& delta,
               double eta0);

  const NetworkConfig& config() const { return cfg_; }
  int width() const { return cfg_.width; }
  int depth() const { return cfg_.depth; }
  double gamma() const;
  int input_dim() const { return input_dim_; }

  // Parameters are exposed for inspection and finite-difference checks.
  Eigen::MatrixXd w_in;               // N x D
  std::vector<Eigen::MatrixXd> w_hidden;  // w_hidden[l-1] = W^l, l = 1..L-1, N x N
  Eigen::VectorXd w_out;              // N
  std::vector<Eigen::VectorXd> biases;  // b^0 .. b^{L-1} when enabled

 private:
  NetworkConfig cfg_;
  int input_dim_;
};

// gamma^2 grad f_mu . grad f_nu from explicit per-sample parameter gradients.
Eigen::MatrixXd parameter_space_ntk(const Mlp& net, const Eigen::MatrixXd& x);

struct TrainOptions {
  LossKind loss = LossKind::mse;
  bool log_fields = true;  // keep phi(h^l), g^l at every grid point
};

struct TrainLog {
  TimeGrid grid;
  double eta0 = 0;
  int stride = 1;  // GD steps per grid interval, dt = eta0 * stride
  int width = 0;
  int depth = 0;
  bool bias = false;
  Eigen::MatrixXd kx;
  Eigen::VectorXd step_loss;  // loss before every GD step, plus after the last one
  Eigen::MatrixXd f;          // P' x T
  Eigen::VectorXd loss;       // per grid point
  // phi[l][k], g[l][k]: N x P' at grid point k, l = 1..L (index 0 unused)
  std::vector<std::vector<Eigen::MatrixXd>> phi, g;
};

TrainLog train(Mlp& net, const SampleSet& data, const TimeGrid& grid, double eta0,
               const TrainOptions& opts = {});

struct MeasuredKernels {
  std::vector<Kernel> phi;  // phi[l], l = 0..L (phi[0] = K^x)
  std::vector<Kernel> g;    // g[l], l = 1..L (g[0] unused, zero)
  Kernel ntk;
};

MeasuredKernels measure_kernels(const TrainLog& log);

}  // namespace dmft
