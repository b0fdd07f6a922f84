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

#include "dmft/approx.hpp"

#include "dmft/error.hpp"

namespace dmft {

DmftState gradient_independence_solve(const DmftConfig& cfg, const SampleSet& data,
                                      const TimeGrid& grid, const DmftSolver::Observer& observer) {
  DmftConfig c = cfg;
  c.gradient_independence = true;
  return dmft_solve(c, data, grid, observer);
}

PerturbationFunctions perturbation_functions(const Eigen::MatrixXd& kx_train,
                                             const Eigen::VectorXd& y, const TimeGrid& grid,
                                             int depth, PerturbativeQuadrature mode) {
  const Eigen::Index P = kx_train.rows();
  require(kx_train.cols() == P && y.size() == P, ErrorKind::ShapeMismatch,
          "perturbation functions need a square train gram and matching targets");
  const int T = grid.n_steps();
  const double dt = grid.dt(), rate = depth + 1.0;
  PerturbationFunctions pf{Eigen::MatrixXd::Zero(P, T), std::vector<Eigen::MatrixXd>(T),
                           Eigen::MatrixXd::Zero(P, T)};
  pf.vab[0] = Eigen::MatrixXd::Zero(P, P);

  if (mode == PerturbativeQuadrature::discrete) {
    Eigen::VectorXd d = y;
    for (int k = 0; k < T; ++k) {
      pf.delta0.col(k) = d;
      if (k + 1 == T) break;
      pf.v.col(k + 1) = pf.v.col(k) + dt * d;
      pf.vab[k + 1] = pf.vab[k] + dt * d * pf.v.col(k).transpose();
      d -= dt * rate * kx_train * d;
    }
    return pf;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kx_train);
  const Eigen::MatrixXd& Q = es.eigenvectors();
  const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  const Eigen::VectorXd qy = Q.transpose() * y;
  auto delta_at = [&](double t) -> Eigen::VectorXd {
    return Q * (qy.array() * (-rate * lam.array() * t).exp()).matrix();
  };
  constexpr int kSub = 200;
  const double h = dt / kSub;
  Eigen::VectorXd v = Eigen::VectorXd::Zero(P);
  Eigen::MatrixXd vab = Eigen::MatrixXd::Zero(P, P);
  Eigen::VectorXd d = y;
  pf.delta0.col(0) = y;
  for (int k = 1; k < T; ++k) {
    for (int i = 0; i < kSub; ++i) {
      const double t1 = grid.time(k - 1) + (i + 1) * h;
      const Eigen::VectorXd dn = delta_at(t1);
      const Eigen::VectorXd vn = v + 0.5 * h * (d + dn);
      vab += 0.5 * h * (d * v.transpose() + dn * vn.transpose());
      v = vn;
      d = dn;
    }
    pf.delta0.col(k) = d;
    pf.v.col(k) = v;
    pf.vab[k] = vab;
  }
  return pf;
}

PerturbativeNtk perturbative_linear_ntk(const Eigen::MatrixXd& kx, const Eigen::VectorXd& y,
                                        const TimeGrid& grid, double gamma0, int depth,
                                        PerturbativeQuadrature mode) {
  require(depth >= 1, ErrorKind::InvalidConfig, "depth must be >= 1");
  require(kx.rows() == kx.cols(), ErrorKind::ShapeMismatch, "input gram must be square");
  const int Pt = static_cast<int>(kx.rows()), P = static_cast<int>(y.size());
  require(P >= 1 && P <= Pt, ErrorKind::DimensionMismatch, "more targets than samples");
  const int T = grid.n_steps(), L = depth;
  const Eigen::MatrixXd ktr = kx.topLeftCorner(P, P);
  const Eigen::MatrixXd kc = kx.leftCols(P);  // K^x_{mu alpha}, alpha over train

  PerturbativeNtk out{Kernel::zeros(Pt, grid, "ntk-perturbative"), {}, {},
                      perturbation_functions(ktr, y, grid, L, mode), 0.0};
  const auto& pf = out.functions;

  // M(t,s)_{ab} = v_ab(t) + v_ba(s) [S-type] and v_a(t) v_b(s) [V-type].
  const int n = Pt * T;
  Eigen::MatrixXd s_h(n, n), v_h(n, n), s_g(T, T), w_g(T, T);
  for (int t = 0; t < T; ++t)
    for (int s = 0; s < T; ++s) {
      const Eigen::MatrixXd ms = pf.vab[t] + pf.vab[s].transpose();
      const Eigen::MatrixXd mv = pf.v.col(t) * pf.v.col(s).transpose();
      const Eigen::MatrixXd hs = kc * ms * kc.transpose();
      const Eigen::MatrixXd hv = kc * mv * kc.transpose();
      for (int mu = 0; mu < Pt; ++mu)
        for (int nu = 0; nu < Pt; ++nu) {
          s_h(mu * T + t, nu * T + s) = hs(mu, nu);
          v_h(mu * T + t, nu * T + s) = hv(mu, nu);
        }
      s_g(t, s) = ktr.cwiseProduct(ms).sum();
      w_g(t, s) = ktr.cwiseProduct(mv).sum();
    }

  // Zeroth-order operators scale as C^m = m C_0 and D^m = (L+1-m) D_0, so
  // layer m contributes m(L+1-m) S + m^2 V to H and m(L+1-m) S' + (L+1-m)^2 W to G.
  out.h2.assign(L + 1, Eigen::MatrixXd::Zero(n, n));
  for (int l = 1; l <= L; ++l) {
    const double m = l, cs = m * (L + 1 - m), cv = m * m;
    out.h2[l] = out.h2[l - 1] + cs * s_h + cv * v_h;
  }
  out.g2.assign(L + 2, Eigen::MatrixXd::Zero(T, T));
  out.g2[0].resize(0, 0);
  for (int l = L; l >= 1; --l) {
    const double m = l, cs = m * (L + 1 - m), cw = (L + 1 - m) * (L + 1 - m);
    out.g2[l] = out.g2[l + 1] + cs * s_g + cw * w_g;
  }
  for (int m = 1; m <= L; ++m) out.coefficient += static_cast<double>(m) * m * (L + 1 - m);

  // NTK = sum_l G^{l+1} ⊙ H^l; at O(gamma0^2) the K^x-weighted G terms and the H terms.
  const Kernel base = Kernel::constant_in_time(kx, grid);
  Eigen::MatrixXd g2sum = Eigen::MatrixXd::Zero(T, T);
  for (int l = 0; l <= L; ++l) g2sum += out.g2[l + 1];
  Eigen::MatrixXd corr = Eigen::MatrixXd::Zero(n, n);
  for (int l = 1; l <= L; ++l) corr += out.h2[l];
  for (int mu = 0; mu < Pt; ++mu)
    for (int nu = 0; nu < Pt; ++nu) corr.block(mu * T, nu * T, T, T) += kx(mu, nu) * g2sum;
  out.ntk.values() = (L + 1.0) * base.values() + gamma0 * gamma0 * corr;
  return out;
}

}  // namespace dmft
