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

#include "dmft/reference_nn.hpp"

#include <cmath>
#include <random>
#include <string>

#include "dmft/error.hpp"
#include "dmft/gp_sample.hpp"

namespace dmft {

namespace {

Eigen::MatrixXd gaussian_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd m(r, c);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = nd(rng);
  return m;
}

}  // namespace

Mlp::Mlp(const NetworkConfig& cfg, int input_dim, std::uint64_t seed)
    : cfg_(cfg), input_dim_(input_dim) {
  require(cfg.width >= 1 && cfg.depth >= 1 && input_dim >= 1, ErrorKind::InvalidConfig,
          "network needs width, depth and input dimension >= 1");
  require(cfg.gamma0 > 0, ErrorKind::InvalidConfig, "reference network needs gamma0 > 0");
  const int N = cfg.width;
  auto rng = make_stream({seed, 0, 0, 0, 7});
  w_in = gaussian_matrix(rng, N, input_dim);
  for (int l = 1; l < cfg.depth; ++l) w_hidden.push_back(gaussian_matrix(rng, N, N));
  w_out = gaussian_matrix(rng, N, 1).col(0);
  if (cfg.bias)
    for (int l = 0; l < cfg.depth; ++l) biases.push_back(gaussian_matrix(rng, N, 1).col(0));
}

double Mlp::gamma() const { return cfg_.gamma0 * std::sqrt(static_cast<double>(cfg_.width)); }

Mlp::Pass Mlp::forward(const Eigen::MatrixXd& x) const {
  require(x.cols() == input_dim_, ErrorKind::DimensionMismatch, "input dimension mismatch");
  const int L = cfg_.depth;
  const double sn = std::sqrt(static_cast<double>(cfg_.width));
  Pass p;
  p.h.resize(L + 1);
  p.phi.resize(L + 1);
  p.h[1] = w_in * x.transpose() / std::sqrt(static_cast<double>(input_dim_));
  for (int l = 1; l <= L; ++l) {
    if (l > 1) p.h[l] = w_hidden[l - 2] * p.phi[l - 1] / sn;
    if (cfg_.bias) p.h[l].colwise() += biases[l - 1];
    p.phi[l] = apply_phi(cfg_.activation, p.h[l].array()).matrix();
  }
  p.f = p.phi[L].transpose() * w_out / (gamma() * sn);
  if (!p.f.allFinite()) fail(ErrorKind::NonFiniteValue, "network output diverged");
  return p;
}

void Mlp::backward(Pass& p) const {
  const int L = cfg_.depth;
  const double sn = std::sqrt(static_cast<double>(cfg_.width));
  p.g.assign(L + 1, Eigen::MatrixXd());
  const Eigen::Index P = p.h[L].cols();
  Eigen::MatrixXd z = w_out.replicate(1, P);
  for (int l = L; l >= 1; --l) {
    if (l < L) z = w_hidden[l - 1].transpose() * p.g[l + 1] / sn;
    p.g[l] = apply_dphi(cfg_.activation, p.h[l].array()).matrix().cwiseProduct(z);
  }
}

void Mlp::gd_step(const Eigen::MatrixXd& x, const Pass& p, const Eigen::VectorXd& delta,
                  double eta0) {
  const int L = cfg_.depth;
  const double N = cfg_.width, sn = std::sqrt(N), gam = gamma();
  const double shrink = 1.0 - eta0 * cfg_.lambda_wd;
  const Eigen::Index P = delta.size();
  // Gradients only read the pass, so every parameter is updated in place and
  // no width x width temporary is formed.
  w_out = shrink * w_out + (eta0 * gam / sn) * (p.phi[L].leftCols(P) * delta);
  for (int l = 1; l < L; ++l) {
    Eigen::MatrixXd& w = w_hidden[l - 1];
    if (shrink != 1.0) w *= shrink;
    w.noalias() += (eta0 * gam / N) * (p.g[l + 1].leftCols(P) * delta.asDiagonal()) *
                   p.phi[l].leftCols(P).transpose();
  }
  if (shrink != 1.0) w_in *= shrink;
  w_in.noalias() += (eta0 * gam / std::sqrt(N * input_dim_)) *
                    (p.g[1].leftCols(P) * delta.asDiagonal()) * x.topRows(P);
  for (size_t l = 0; l < biases.size(); ++l)
    biases[l] = shrink * biases[l] + (eta0 * gam / sn) * (p.g[l + 1].leftCols(P) * delta);
}

Eigen::MatrixXd parameter_space_ntk(const Mlp& net, const Eigen::MatrixXd& x) {
  Mlp::Pass p = net.forward(x);
  net.backward(p);
  const int L = net.depth();
  const double N = net.width(), sn = std::sqrt(N), gam = net.gamma();
  const Eigen::Index P = x.rows();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(P, P);
  // df_mu/dW for one layer, materialized as a full matrix.
  auto grad = [&](int layer, Eigen::Index mu) -> Eigen::MatrixXd {
    if (layer == 0)
      return p.g[1].col(mu) * x.row(mu) / (gam * std::sqrt(N * net.input_dim()));
    if (layer < L) return p.g[layer + 1].col(mu) * p.phi[layer].col(mu).transpose() / (gam * N);
    return p.phi[L].col(mu) / (gam * sn);
  };
  for (int layer = 0; layer <= L; ++layer)
    for (Eigen::Index mu = 0; mu < P; ++mu) {
      const Eigen::MatrixXd gm = grad(layer, mu);
      for (Eigen::Index nu = 0; nu <= mu; ++nu) {
        const double v = gm.cwiseProduct(grad(layer, nu)).sum();
        K(mu, nu) += v;
        if (nu != mu) K(nu, mu) += v;
      }
    }
  if (net.config().bias)
    for (int l = 0; l < L; ++l)
      for (Eigen::Index mu = 0; mu < P; ++mu)
        for (Eigen::Index nu = 0; nu < P; ++nu)
          K(mu, nu) += p.g[l + 1].col(mu).dot(p.g[l + 1].col(nu)) / (gam * gam * N);
  return gam * gam * K;
}

TrainLog train(Mlp& net, const SampleSet& data, const TimeGrid& grid, double eta0,
               const TrainOptions& opts) {
  require(data.inputs().has_value(), ErrorKind::InvalidConfig,
          "the reference network needs raw inputs, not only a gram matrix");
  require(eta0 > 0, ErrorKind::InvalidConfig, "eta0 must be > 0");
  const double ratio = grid.dt() / eta0;
  const int stride = static_cast<int>(std::lround(ratio));
  require(stride >= 1 && std::abs(ratio - stride) < 1e-9 * ratio, ErrorKind::InvalidConfig,
          "grid dt must be an integer multiple of eta0");
  const Eigen::MatrixXd& x = *data.inputs();
  const int T = grid.n_steps(), L = net.depth(), Pt = data.n_total(), P = data.n_train();
  TrainLog log{grid, eta0, stride, net.width(), L, net.config().bias, data.input_gram(),
               Eigen::VectorXd((T - 1) * stride + 1), Eigen::MatrixXd(Pt, T), Eigen::VectorXd(T),
               {}, {}};
  if (opts.log_fields) {
    log.phi.assign(L + 1, {});
    log.g.assign(L + 1, {});
  }
  const int n_steps = (T - 1) * stride;
  for (int step = 0; step <= n_steps; ++step) {
    Mlp::Pass p = net.forward(x);
    const Eigen::VectorXd ftr = p.f.head(P);
    const Eigen::VectorXd delta = loss_residual(opts.loss, ftr, data.targets());
    log.step_loss[step] = loss_value(opts.loss, ftr, data.targets());
    const bool checkpoint = step % stride == 0;
    if (checkpoint || step < n_steps) net.backward(p);
    if (checkpoint) {
      const int k = step / stride;
      log.f.col(k) = p.f;
      log.loss[k] = log.step_loss[step];
      if (opts.log_fields)
        for (int l = 1; l <= L; ++l) {
          log.phi[l].push_back(p.phi[l]);
          log.g[l].push_back(p.g[l]);
        }
    }
    if (step < n_steps) net.gd_step(x, p, delta, eta0);
  }
  return log;
}

MeasuredKernels measure_kernels(const TrainLog& log) {
  const int L = log.depth, T = log.grid.n_steps();
  require(static_cast<int>(log.phi.size()) == L + 1 && static_cast<int>(log.g.size()) == L + 1,
          ErrorKind::MissingCheckpoint, "training log holds no field snapshots");
  const int Pt = static_cast<int>(log.kx.rows());
  const double N = log.width;
  auto gram = [&](const std::vector<Eigen::MatrixXd>& snaps, const std::string& name) {
    require(static_cast<int>(snaps.size()) == T, ErrorKind::MissingCheckpoint,
            name + ": expected " + std::to_string(T) + " checkpoints, have " +
                std::to_string(snaps.size()));
    Eigen::MatrixXd X(snaps.front().rows(), static_cast<Eigen::Index>(Pt) * T);
    for (int k = 0; k < T; ++k)
      for (int mu = 0; mu < Pt; ++mu) X.col(mu * T + k) = snaps[k].col(mu);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(X.cols(), X.cols());
    K.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(), 1.0 / N);
    K.triangularView<Eigen::StrictlyUpper>() = K.transpose();
    return Kernel(std::move(K), iota_set(Pt), iota_set(Pt), log.grid, name);
  };
  MeasuredKernels m{{Kernel::constant_in_time(log.kx, log.grid, "phi0")},
                    {Kernel::zeros(Pt, log.grid, "g0")},
                    Kernel::zeros(Pt, log.grid, "ntk")};
  for (int l = 1; l <= L; ++l) {
    m.phi.push_back(gram(log.phi[l], "phi" + std::to_string(l)));
    m.g.push_back(gram(log.g[l], "g" + std::to_string(l)));
  }
  std::vector<Kernel> phis(m.phi.begin() + 1, m.phi.end());
  std::vector<Kernel> gs(m.g.begin() + 1, m.g.end());
  m.ntk = ntk_assemble(phis, gs, log.kx, log.bias);
  return m;
}

}  // namespace dmft
