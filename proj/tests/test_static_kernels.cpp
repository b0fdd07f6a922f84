// Copyright 2026 The dmft Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <random>

#include "dmft/static_kernels.hpp"
#include "support.hpp"

namespace dmft {
namespace {

TEST(StaticKernels, LinearIsIdentityMap) {
  const Eigen::MatrixXd kx = testing::random_psd(4, 3);
  for (int L : {1, 2, 3}) {
    const StaticKernels sk = static_kernels(Activation::linear, kx, L);
    for (int l = 0; l <= L; ++l) EXPECT_LT((sk.phi[l] - kx).cwiseAbs().maxCoeff(), 1e-12);
    for (int l = 1; l <= L + 1; ++l) EXPECT_LT((sk.g[l] - Eigen::MatrixXd::Ones(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((sk.ntk - (L + 1) * kx).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(StaticKernels, ReluOrthogonalInputsAgainstMonteCarlo) {
  const Eigen::MatrixXd kx = Eigen::MatrixXd::Identity(2, 2);
  const StaticKernels sk = static_kernels(Activation::relu, kx, 1);
  const double pi = boost::math::constants::pi<double>();
  EXPECT_NEAR(sk.phi[1](0, 0), 0.5, 1e-12);
  EXPECT_NEAR(sk.phi[1](0, 1), 1.0 / (2 * pi), 1e-12);

  // Independent oracle: 1e7 Gaussian draws.
  std::mt19937_64 rng(123);
  std::normal_distribution<double> nd;
  const int n = 10'000'000;
  double s00 = 0, s01 = 0;
  for (int i = 0; i < n; ++i) {
    const double a = std::max(nd(rng), 0.0), b = std::max(nd(rng), 0.0);
    s00 += a * a;
    s01 += a * b;
  }
  EXPECT_NEAR(sk.phi[1](0, 0), s00 / n, 5e-3 / std::sqrt(10.0));
  EXPECT_NEAR(sk.phi[1](0, 1), s01 / n, 5e-3 / std::sqrt(10.0));
}

TEST(StaticKernels, ReluCorrelatedAgainstMonteCarlo) {
  Eigen::MatrixXd kx(2, 2);
  kx << 1.5, 0.6, 0.6, 0.8;
  const StaticKernels sk = static_kernels(Activation::relu, kx, 2);
  const Eigen::LLT<Eigen::MatrixXd> llt(kx);
  const Eigen::MatrixXd l = llt.matrixL();
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  const int n = 2'000'000;
  Eigen::Matrix2d phi = Eigen::Matrix2d::Zero(), dot = Eigen::Matrix2d::Zero();
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d u = l * Eigen::Vector2d(nd(rng), nd(rng));
    const Eigen::Vector2d p = u.cwiseMax(0.0);
    const Eigen::Vector2d d = (u.array() > 0).cast<double>();
    phi += p * p.transpose();
    dot += d * d.transpose();
  }
  phi /= n;
  dot /= n;
  EXPECT_LT((sk.phi[1] - phi).cwiseAbs().maxCoeff(), 5e-3);
  EXPECT_LT((sk.phidot[1] - dot).cwiseAbs().maxCoeff(), 5e-3);
  // Top-layer gradient kernel is the derivative kernel.
  EXPECT_LT((sk.g[2] - sk.phidot[2]).cwiseAbs().maxCoeff(), 1e-12);
}

double tanh_second_moment(double q) {
  const double norm = 1.0 / std::sqrt(2 * boost::math::constants::pi<double>());
  auto f = [&](double z) {
    const double t = std::tanh(std::sqrt(q) * z);
    return t * t * norm * std::exp(-0.5 * z * z);
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 15, 1e-13);
}

TEST(StaticKernels, TanhDiagonalAgainstAdaptiveQuadrature) {
  Eigen::MatrixXd kx(3, 3);
  kx << 0.3, 0.1, 0.0, 0.1, 1.0, 0.2, 0.0, 0.2, 4.0;
  const StaticKernels sk = static_kernels(Activation::tanh, kx, 1, 320);
  for (int mu = 0; mu < 3; ++mu)
    EXPECT_NEAR(sk.phi[1](mu, mu), tanh_second_moment(kx(mu, mu)), 1e-8) << "q=" << kx(mu, mu);
}

TEST(StaticKernels, TanhQuadratureErrorShrinksWithNodes) {
  // tanh has poles off the real axis, so Hermite convergence slows as the variance grows.
  Eigen::MatrixXd kx(1, 1);
  kx << 4.0;
  const double oracle = tanh_second_moment(4.0);
  double prev = 1.0;
  for (int n : {20, 40, 80, 160}) {
    const double err = std::abs(static_kernels(Activation::tanh, kx, 1, n).phi[1](0, 0) - oracle);
    EXPECT_LT(err, prev / 5) << n;
    prev = err;
  }
  kx << 1.0;
  EXPECT_NEAR(static_kernels(Activation::tanh, kx, 1).phi[1](0, 0), tanh_second_moment(1.0), 1e-9);
}

TEST(StaticKernels, GaussHermiteMoments) {
  const GaussHermiteRule r = gauss_hermite(20);
  EXPECT_NEAR(r.weights.sum(), 1.0, 1e-13);
  EXPECT_NEAR(r.weights.dot(r.nodes.array().square().matrix()), 1.0, 1e-12);
  EXPECT_NEAR(r.weights.dot(r.nodes.array().pow(4).matrix()), 3.0, 1e-11);
}

TEST(StaticKernels, NtkIsPositiveSemidefinite) {
  const Eigen::MatrixXd kx = testing::random_psd(5, 8);
  for (Activation a : {Activation::relu, Activation::tanh}) {
    const StaticKernels sk = static_kernels(a, kx, 3);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sk.ntk).eigenvalues().minCoeff(), -1e-10);
  }
}

}  // namespace
}  // namespace dmft
