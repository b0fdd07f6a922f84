// Copyright 2026 The dmft Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "dmft/error.hpp"
#include "dmft/predictions.hpp"
#include "support.hpp"

namespace dmft {
namespace {

std::vector<Eigen::MatrixXd> constant_ntk(const Eigen::MatrixXd& k, int T) {
  return std::vector<Eigen::MatrixXd>(T, k);
}

TEST(Loss, ResidualIsNegativeGradient) {
  const Eigen::VectorXd f = Eigen::Vector2d(0.3, -1.2), y = Eigen::Vector2d(1.0, -1.0);
  for (LossKind kind : {LossKind::mse, LossKind::logistic}) {
    const Eigen::VectorXd d = loss_residual(kind, f, y);
    for (int i = 0; i < 2; ++i) {
      Eigen::VectorXd fp = f, fm = f;
      fp[i] += 1e-6;
      fm[i] -= 1e-6;
      const double grad = (loss_value(kind, fp, y) - loss_value(kind, fm, y)) / 2e-6;
      EXPECT_NEAR(d[i], -grad, 1e-8);
    }
  }
  EXPECT_THROW(parse_loss("hinge"), Error);
}

TEST(NtkAssemble, SingleLayerTwoTerms) {
  const TimeGrid g(2, 0.1);
  const Eigen::MatrixXd kx = testing::random_psd(2, 1);
  const Kernel phi(testing::random_psd(4, 2), iota_set(2), iota_set(2), g);
  const Kernel gk(testing::random_psd(4, 3), iota_set(2), iota_set(2), g);
  const Kernel k = ntk_assemble({phi}, {gk}, kx);
  const Eigen::MatrixXd expect =
      phi.values() + gk.values().cwiseProduct(Kernel::constant_in_time(kx, g).values());
  EXPECT_LT((k.values() - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(NtkAssemble, DeepLinearAtInit) {
  const TimeGrid g(3, 0.1);
  const Eigen::MatrixXd kx = testing::random_psd(3, 7);
  const int L = 4;
  const Kernel phi = Kernel::constant_in_time(kx, g);
  const Kernel one = Kernel::constant_in_time(Eigen::MatrixXd::Ones(3, 3), g);
  const Kernel k = ntk_assemble(std::vector<Kernel>(L, phi), std::vector<Kernel>(L, one), kx);
  EXPECT_LT((k.values() - (L + 1) * phi.values()).cwiseAbs().maxCoeff(), 1e-13);
  const auto diag = ntk_equal_time(std::vector<Kernel>(L, phi), std::vector<Kernel>(L, one), kx);
  ASSERT_EQ(diag.size(), 3u);
  EXPECT_TRUE(diag[2].isApprox((L + 1) * kx));
}

TEST(Integrate, ScalarGeometric) {
  const TimeGrid g(20, 0.1);
  const auto p = integrate_predictions(constant_ntk(Eigen::MatrixXd::Identity(1, 1), 20),
                                       Eigen::VectorXd::Ones(1), 1, LossKind::mse, g);
  for (int k = 0; k < 20; ++k) EXPECT_NEAR(p.f(0, k), 1 - std::pow(0.9, k), 1e-14);
  EXPECT_NEAR(p.loss[5], 0.5 * std::pow(0.9, 10), 1e-14);
}

TEST(Integrate, ZeroKernel) {
  const TimeGrid g(5, 0.1);
  const Eigen::VectorXd y = Eigen::Vector2d(1, -2);
  const auto p = integrate_predictions(constant_ntk(Eigen::MatrixXd::Zero(2, 2), 5), y, 2,
                                       LossKind::mse, g);
  EXPECT_EQ(p.f.values().cwiseAbs().maxCoeff(), 0.0);
  for (int k = 0; k < 5; ++k) EXPECT_TRUE(p.delta.values().col(k).isApprox(y));
}

// Exact flow y - expm(-K t) y from an eigendecomposition.
Eigen::VectorXd exact_flow(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double t) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  const Eigen::VectorXd decay = (-es.eigenvalues().array() * t).exp();
  return y - es.eigenvectors() * decay.asDiagonal() * es.eigenvectors().transpose() * y;
}

TEST(Integrate, MatrixExponentialOracle) {
  Eigen::MatrixXd k(2, 2);
  k << 2, 1, 1, 2;
  const Eigen::VectorXd y = Eigen::Vector2d(1, 0);
  double prev_err = 0;
  for (double dt : {0.02, 0.01}) {
    const int T = static_cast<int>(std::lround(1.0 / dt)) + 1;
    const TimeGrid g(T, dt);
    const auto p = integrate_predictions(constant_ntk(k, T), y, 2, LossKind::mse, g);
    double err = 0;
    for (int j = 0; j < T; ++j)
      err = std::max(err, (p.f.values().col(j) - exact_flow(k, y, g.time(j))).cwiseAbs().maxCoeff());
    EXPECT_LT(err, 2.0 * dt);
    if (prev_err > 0) {
      EXPECT_NEAR(prev_err / err, 2.0, 0.2);  // first order in dt
    }
    prev_err = err;
  }
}

TEST(Integrate, TestRowsFollowTrainResidual) {
  const TimeGrid g(10, 0.1);
  const Eigen::MatrixXd k = testing::random_psd(3, 9);
  const Eigen::VectorXd y = Eigen::Vector2d(1, -1);
  const auto p = integrate_predictions(constant_ntk(k, 10), y, 2, LossKind::mse, g);
  EXPECT_EQ(p.f.n_samples(), 3);
  EXPECT_EQ(p.delta.n_samples(), 2);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(3);
  for (int j = 0; j + 1 < 10; ++j) f += 0.1 * k.leftCols(2) * (y - f.head(2));
  EXPECT_TRUE(p.f.values().col(9).isApprox(f, 1e-12));
}

TEST(Integrate, MonotoneUnderStableStep) {
  const Eigen::MatrixXd k = testing::random_psd(4, 3);
  const double lmax = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues().maxCoeff();
  const TimeGrid g(50, 1.5 / lmax);
  const auto p = integrate_predictions(constant_ntk(k, 50), Eigen::VectorXd::Ones(4), 4,
                                       LossKind::mse, g);
  for (int j = 1; j < 50; ++j) EXPECT_LE(p.delta.values().col(j).norm(), p.delta.values().col(j - 1).norm() + 1e-15);
}

TEST(Integrate, DivergenceIsReported) {
  const TimeGrid g(2000, 10.0);
  try {
    integrate_predictions(constant_ntk(Eigen::MatrixXd::Identity(1, 1), 2000), Eigen::VectorXd::Ones(1), 1,
                          LossKind::mse, g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFiniteValue);
  }
}

TEST(Alignment, Values) {
  const Eigen::MatrixXd x = testing::random_psd(3, 2);
  EXPECT_NEAR(alignment(x, x), 1.0, 1e-15);
  EXPECT_NEAR(alignment(x, -x), -1.0, 1e-15);
  Eigen::MatrixXd a(2, 2), b(2, 2);
  a << 1, 0, 0, 0;
  b << 1, 1, 1, 1;
  EXPECT_NEAR(alignment(a, b), 0.5, 1e-15);  // Tr(ab) = 1, norms 1 and 2
  try {
    alignment(a, Eigen::MatrixXd::Zero(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ZeroNorm);
  }
}

}  // namespace
}  // namespace dmft
