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

#include "dmft/linear.hpp"

#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <string>

#include "dmft/error.hpp"

namespace dmft {

void LinearConfig::validate() const {
  require(depth >= 1, ErrorKind::InvalidConfig, "depth must be >= 1");
  require(gamma0 >= 0 && std::isfinite(gamma0), ErrorKind::InvalidConfig, "gamma0 must be >= 0");
  require(beta > 0 && beta <= 1, ErrorKind::InvalidConfig, "beta must lie in (0, 1]");
  require(tol > 0 && max_iters >= 1, ErrorKind::InvalidConfig, "bad tolerance settings");
}

Kernel LinearDmftState::h_kernel(int l) const {
  const int P = n_samples();
  return Kernel(h.at(l), iota_set(P), iota_set(P), grid, "h" + std::to_string(l));
}

Kernel LinearDmftState::g_kernel(int l) const {
  const int P = n_samples(), T = grid.n_steps();
  Eigen::MatrixXd v(P * T, P * T);
  for (int mu = 0; mu < P; ++mu)
    for (int a = 0; a < P; ++a) v.block(mu * T, a * T, T, T) = g.at(l);
  return Kernel(std::move(v), iota_set(P), iota_set(P), grid, "g" + std::to_string(l));
}

std::vector<Eigen::MatrixXd> LinearDmftState::ntk_diagonal() const {
  const int P = n_samples(), T = grid.n_steps(), L = depth();
  std::vector<Eigen::MatrixXd> out(T, Eigen::MatrixXd::Zero(P, P));
  for (int k = 0; k < T; ++k)
    for (int l = 0; l <= L; ++l) {
      const double gk = g[l + 1](k, k);
      for (int mu = 0; mu < P; ++mu)
        for (int a = 0; a < P; ++a) out[k](mu, a) += gk * h[l](mu * T + k, a * T + k);
    }
  return out;
}

Kernel LinearDmftState::ntk() const {
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(h[0].rows(), h[0].cols());
  for (int l = 0; l <= depth(); ++l) v += g_kernel(l + 1).values().cwiseProduct(h[l]);
  const int P = n_samples();
  return Kernel(std::move(v), iota_set(P), iota_set(P), grid, "ntk");
}

LinearOperators build_linear_operators(const LinearDmftState& st, int l) {
  const int P = st.n_samples(), T = st.grid.n_steps(), Ptr = st.delta.n_samples();
  const double dt = st.grid.dt();
  const Eigen::MatrixXd& hp = st.h[l - 1];
  const Eigen::MatrixXd& gn = st.g[l + 1];
  LinearOperators op{dt * st.a[l - 1], dt * st.b[l]};
  const Eigen::MatrixXd& d = st.delta.values();
  for (int mu = 0; mu < P; ++mu)
    for (int k = 0; k < T; ++k)
      for (int j = 0; j < k; ++j) {
        double s = 0;
        for (int a = 0; a < Ptr; ++a) s += hp(mu * T + k, a * T + j) * d(a, j);
        op.C(mu * T + k, j) += dt * s;
      }
  for (int k = 0; k < T; ++k)
    for (int a = 0; a < Ptr; ++a)
      for (int j = 0; j < k; ++j) op.D(k, a * T + j) += dt * gn(k, j) * d(a, j);
  return op;
}

namespace {

void refresh_linear_predictions(LinearDmftState& st, const SampleSet& data) {
  Predictions p = integrate_predictions(st.ntk_diagonal(), data.targets(), data.n_train(),
                                        st.config.loss, st.grid);
  st.f = std::move(p.f);
  st.delta = std::move(p.delta);
  st.loss = std::move(p.loss);
}

double damp(Eigen::MatrixXd& k, const Eigen::MatrixXd& est, double beta) {
  const Eigen::MatrixXd old = k;
  k = (1.0 - beta) * old + beta * est;
  // Scaled by the larger norm so response kernels that start at zero report O(1).
  const double scale = std::max(old.norm(), k.norm());
  return scale > 0 ? (k - old).norm() / scale : 0.0;
}

}  // namespace

LinearDmftState linear_solve(const LinearConfig& cfg, const SampleSet& data, const TimeGrid& grid) {
  cfg.validate();
  const int L = cfg.depth, P = data.n_total(), T = grid.n_steps();
  const double dt = grid.dt(), g2 = cfg.gamma0 * cfg.gamma0;
  LinearDmftState st{cfg, grid, data.input_gram(), {}, {}, {}, {},
                     Trajectory(P, grid), Trajectory(data.n_train(), grid),
                     Eigen::VectorXd::Zero(T), 0, false, {}};
  const Eigen::MatrixXd h0 = Kernel::constant_in_time(data.input_gram(), grid).values();
  st.h.assign(L + 1, h0);
  st.g.assign(L + 2, Eigen::MatrixXd::Ones(T, T));
  st.g[0].resize(0, 0);
  st.a.assign(L + 1, Eigen::MatrixXd::Zero(P * T, T));
  st.b.assign(L + 1, Eigen::MatrixXd::Zero(T, P * T));
  refresh_linear_predictions(st, data);

  const Eigen::MatrixXd It = Eigen::MatrixXd::Identity(T, T);
  while (st.iterations < cfg.max_iters) {
    double change = 0;
    for (int l = 1; l <= L; ++l) {
      const LinearOperators op = build_linear_operators(st, l);
      const Eigen::MatrixXd& C = op.C;
      const Eigen::MatrixXd& D = op.D;
      if (!C.allFinite() || !D.allFinite())
        fail(ErrorKind::NonFiniteValue, "linear DMFT iterate diverged at layer " + std::to_string(l) +
                                            " (reduce dt or gamma0)");
      // (I - g2 C D)^{-1} = I + g2 C (I - g2 D C)^{-1} D; only the T x T system is factorized.
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(It - g2 * D * C);
      if (!(std::abs(lu.determinant()) > 1e-300) || lu.rcond() < 1e-14)
        fail(ErrorKind::SingularResolvent,
             "I - gamma0^2 D C is singular at layer " + std::to_string(l) + " (reduce dt or gamma0)");
      auto apply_r = [&](const Eigen::MatrixXd& X) -> Eigen::MatrixXd {
        return X + g2 * C * lu.solve(D * X);
      };
      const Eigen::MatrixXd A_new = apply_r(C) / dt;
      const Eigen::MatrixXd B_new = lu.solve(D) / dt;
      Eigen::MatrixXd Hin = st.h[l - 1];
      Hin.noalias() += g2 * C * st.g[l + 1] * C.transpose();
      Eigen::MatrixXd H_new = apply_r(apply_r(Hin).transpose());
      H_new = 0.5 * (H_new + H_new.transpose()).eval();
      Eigen::MatrixXd Gin = st.g[l + 1];
      Gin.noalias() += g2 * D * st.h[l - 1] * D.transpose();
      Eigen::MatrixXd G_new = lu.solve(Eigen::MatrixXd(lu.solve(Gin).transpose()));
      G_new = 0.5 * (G_new + G_new.transpose()).eval();

      change = std::max(change, damp(st.h[l], H_new, cfg.beta));
      change = std::max(change, damp(st.g[l], G_new, cfg.beta));
      st.h[l] = 0.5 * (st.h[l] + st.h[l].transpose()).eval();
      st.g[l] = 0.5 * (st.g[l] + st.g[l].transpose()).eval();
      if (l < L) change = std::max(change, damp(st.a[l], A_new, cfg.beta));
      if (l > 1) change = std::max(change, damp(st.b[l - 1], B_new, cfg.beta));
    }
    st.iterations += 1;
    refresh_linear_predictions(st, data);
    st.changes.push_back(change);
    if (!std::isfinite(change)) fail(ErrorKind::NonFiniteValue, "linear DMFT iterate diverged");
    if (change < cfg.tol) {
      st.converged = true;
      break;
    }
  }
  return st;
}

namespace {

namespace odeint = boost::numeric::odeint;

int substeps(double dt, double max_step) {
  return std::max(1, static_cast<int>(std::ceil(dt / max_step - 1e-12)));
}

}  // namespace

TwoLayerWhitened two_layer_whitened(double gamma0, double y_norm, const TimeGrid& grid) {
  const int T = grid.n_steps();
  const double g2 = gamma0 * gamma0;
  using State = std::array<double, 2>;  // (H_y, Delta)
  auto rhs = [&](const State& x, State& dx, double) {
    dx[0] = 2.0 * g2 * x[1] * (y_norm - x[1]);
    dx[1] = -2.0 * x[0] * x[1];
  };
  odeint::runge_kutta4<State> stepper;
  State x{1.0, y_norm};
  TwoLayerWhitened out{Eigen::VectorXd(T), Eigen::VectorXd(T)};
  const int m = substeps(grid.dt(), 1e-3);
  const double h = grid.dt() / m;
  for (int k = 0; k < T; ++k) {
    out.h_y[k] = x[0];
    out.delta[k] = x[1];
    if (k + 1 == T) break;
    for (int i = 0; i < m; ++i) stepper.do_step(rhs, x, grid.time(k) + i * h, h);
  }
  return out;
}

TwoLayerGeneral two_layer_general(double gamma0, const Eigen::MatrixXd& kx,
                                  const Eigen::VectorXd& y, const TimeGrid& grid) {
  const Eigen::Index P = kx.rows();
  require(kx.cols() == P && y.size() == P, ErrorKind::ShapeMismatch,
          "two_layer_general: K^x and y sizes differ");
  const int T = grid.n_steps();
  const double g2 = gamma0 * gamma0;
  // State layout: H (P*P, column-major), G, Delta (P).
  using State = std::vector<double>;
  const Eigen::Index nh = P * P;
  auto rhs = [&](const State& x, State& dx, double) {
    Eigen::Map<const Eigen::MatrixXd> H(x.data(), P, P);
    const double G = x[nh];
    Eigen::Map<const Eigen::VectorXd> d(x.data() + nh + 1, P);
    const Eigen::VectorXd f = y - d;
    const Eigen::VectorXd kd = kx * d;
    Eigen::Map<Eigen::MatrixXd> dH(dx.data(), P, P);
    dH = g2 * (kd * f.transpose() + f * kd.transpose());
    dx[nh] = 2.0 * g2 * f.dot(d);
    Eigen::Map<Eigen::VectorXd>(dx.data() + nh + 1, P) = -(H * d + G * kd);
  };
  State x(nh + 1 + P);
  Eigen::Map<Eigen::MatrixXd>(x.data(), P, P) = kx;
  x[nh] = 1.0;
  Eigen::Map<Eigen::VectorXd>(x.data() + nh + 1, P) = y;
  odeint::runge_kutta4<State> stepper;
  TwoLayerGeneral out{std::vector<Eigen::MatrixXd>(T), Eigen::VectorXd(T), Eigen::MatrixXd(P, T)};
  const int m = substeps(grid.dt(), 1e-3);
  const double h = grid.dt() / m;
  for (int k = 0; k < T; ++k) {
    out.h[k] = Eigen::Map<const Eigen::MatrixXd>(x.data(), P, P);
    out.g[k] = x[nh];
    out.delta.col(k) = Eigen::Map<const Eigen::VectorXd>(x.data() + nh + 1, P);
    if (k + 1 == T) break;
    for (int i = 0; i < m; ++i) stepper.do_step(rhs, x, grid.time(k) + i * h, h);
  }
  return out;
}

}  // namespace dmft
