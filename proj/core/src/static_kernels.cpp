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

#include "dmft/static_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dmft/error.hpp"

namespace dmft {

namespace {

constexpr double kDegenerateVariance = 1e-14;

// Returns (E[phi phi], E[phi' phi']) for one pair of preactivations.
std::pair<double, double> pair_moments(Activation act, double s11, double s12, double s22,
                                       const GaussHermiteRule& rule) {
  switch (act) {
    case Activation::linear:
      return {s12, 1.0};
    case Activation::relu: {
      if (s11 < kDegenerateVariance || s22 < kDegenerateVariance) {
        // A deterministic zero preactivation: relu(0) = 0 and the step is 0.
        return {0.0, 0.0};
      }
      const double norm = std::sqrt(s11 * s22);
      const double rho = std::clamp(s12 / norm, -1.0, 1.0);
      const double theta = std::acos(rho);
      const double pi = std::numbers::pi;
      return {norm / (2 * pi) * (std::sin(theta) + (pi - theta) * rho), (pi - theta) / (2 * pi)};
    }
    case Activation::tanh:
      return {bivariate_expectation(phi, phi, act, s11, s12, s22, rule),
              bivariate_expectation(dphi, dphi, act, s11, s12, s22, rule)};
  }
  return {0, 0};
}

}  // namespace

GaussHermiteRule gauss_hermite(int n) {
  require(n >= 1, ErrorKind::InvalidConfig, "Gauss-Hermite rule needs n >= 1");
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  GaussHermiteRule rule;
  rule.nodes = es.eigenvalues();
  rule.weights = es.eigenvectors().row(0).transpose().array().square();
  rule.weights /= rule.weights.sum();
  return rule;
}

double bivariate_expectation(double (*a)(Activation, double), double (*b)(Activation, double),
                             Activation act, double s11, double s12, double s22,
                             const GaussHermiteRule& rule) {
  require(s11 > -1e-10 && s22 > -1e-10, ErrorKind::QuadratureUnderflow,
          "negative variance in Gaussian moment");
  const auto& x = rule.nodes;
  const auto& w = rule.weights;
  const Eigen::Index n = x.size();
  const bool d1 = s11 < kDegenerateVariance, d2 = s22 < kDegenerateVariance;
  if (d1 && d2) return a(act, 0.0) * b(act, 0.0);
  if (d1 || d2) {
    const double s = std::sqrt(d1 ? s22 : s11);
    double e = 0;
    for (Eigen::Index i = 0; i < n; ++i) e += w[i] * (d1 ? b(act, s * x[i]) : a(act, s * x[i]));
    return e * (d1 ? a(act, 0.0) : b(act, 0.0));
  }
  const double su = std::sqrt(s11), sv = std::sqrt(s22);
  const double rho = std::clamp(s12 / (su * sv), -1.0, 1.0);
  const double perp = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  double e = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ai = a(act, su * x[i]);
    double inner = 0;
    for (Eigen::Index j = 0; j < n; ++j) inner += w[j] * b(act, sv * (rho * x[i] + perp * x[j]));
    e += w[i] * ai * inner;
  }
  return e;
}

StaticKernels static_kernels(Activation act, const Eigen::MatrixXd& kx, int depth, int n_quad,
                             bool bias) {
  require(depth >= 1, ErrorKind::InvalidConfig, "depth must be >= 1");
  require(kx.rows() == kx.cols(), ErrorKind::ShapeMismatch, "input gram must be square");
  const Eigen::Index P = kx.rows();
  const GaussHermiteRule rule = act == Activation::tanh ? gauss_hermite(n_quad) : GaussHermiteRule{};
  StaticKernels s;
  s.phi.resize(depth + 1);
  s.phidot.resize(depth + 1);
  s.g.resize(depth + 2);
  s.phi[0] = kx;
  for (int l = 1; l <= depth; ++l) {
    Eigen::MatrixXd cov = s.phi[l - 1];
    if (bias) cov.array() += 1.0;
    Eigen::MatrixXd ph(P, P), pd(P, P);
    for (Eigen::Index i = 0; i < P; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        const auto [m, md] = pair_moments(act, cov(i, i), cov(i, j), cov(j, j), rule);
        ph(i, j) = ph(j, i) = m;
        pd(i, j) = pd(j, i) = md;
      }
    s.phi[l] = std::move(ph);
    s.phidot[l] = std::move(pd);
  }
  s.g[depth + 1] = Eigen::MatrixXd::Ones(P, P);
  for (int l = depth; l >= 1; --l) s.g[l] = s.phidot[l].cwiseProduct(s.g[l + 1]);
  s.ntk = Eigen::MatrixXd::Zero(P, P);
  for (int l = 0; l <= depth; ++l) s.ntk += s.g[l + 1].cwiseProduct(s.phi[l]);
  if (bias)
    for (int l = 1; l <= depth; ++l) s.ntk += s.g[l];
  return s;
}

}  // namespace dmft
