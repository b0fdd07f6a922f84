// Copyright 2026 The dmft Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "dmft/approx.hpp"
#include "dmft/linear.hpp"
#include "support.hpp"

namespace dmft {
namespace {

DmftConfig mc_config(Activation act, int depth, double gamma0) {
  DmftConfig c;
  c.activation = act;
  c.depth = depth;
  c.gamma0 = gamma0;
  c.n_mc = 300;
  c.max_iters = 6;
  return c;
}

TEST(GradientIndependence, LazyIsStatic) {
  const SampleSet data = testing::synthetic(3, 6, 1);
  const TimeGrid g(5, 0.1);
  const DmftState st = gradient_independence_solve(mc_config(Activation::relu, 2, 0.0), data, g);
  const StaticKernels sk = static_kernels(Activation::relu, data.input_gram(), 2);
  EXPECT_LT((st.phi[2].values() - Kernel::constant_in_time(sk.phi[2], g).values()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GradientIndependence, SingleHiddenLayerEqualsFullSolver) {
  const SampleSet data = testing::synthetic(3, 6, 2);
  const TimeGrid g(5, 0.2);
  const DmftConfig cfg = mc_config(Activation::tanh, 1, 1.0);
  const DmftState a = gradient_independence_solve(cfg, data, g);
  const DmftState b = dmft_solve(cfg, data, g);
  EXPECT_EQ(a.phi[1].values(), b.phi[1].values());
  EXPECT_EQ(a.g[1].values(), b.g[1].values());
  EXPECT_EQ(a.f.values(), b.f.values());
}

TEST(GradientIndependence, ResponsesVanish) {
  const SampleSet data = testing::synthetic(2, 6, 3);
  const DmftState st = gradient_independence_solve(mc_config(Activation::tanh, 3, 1.0), data, TimeGrid(4, 0.2));
  for (int l = 0; l <= 3; ++l) {
    EXPECT_EQ(st.a[l].values().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(st.b[l].values().cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(GradientIndependence, UnderestimatesDeepLinearMovement) {
  const SampleSet data = testing::synthetic(6, 10, 4);
  const int T = 8;
  const TimeGrid g(T, 0.02);
  DmftConfig cfg = mc_config(Activation::linear, 5, 1.5);
  cfg.tol = 1e-8;
  cfg.max_iters = 200;
  const DmftState full = dmft_solve(cfg, data, g);
  const DmftState gi = gradient_independence_solve(cfg, data, g);
  ASSERT_TRUE(full.converged && gi.converged);
  const Eigen::MatrixXd h0 = Kernel::constant_in_time(data.input_gram(), g).values();
  for (int l = 2; l <= 4; ++l)
    EXPECT_GT((full.phi[l].values() - h0).norm(), (gi.phi[l].values() - h0).norm()) << l;
}

TEST(Perturbative, Coefficient) {
  const SampleSet data = testing::synthetic(2, 6, 5);
  const TimeGrid g(5, 0.1);
  EXPECT_EQ(perturbative_linear_ntk(data.input_gram(), data.targets(), g, 0.1, 1).coefficient, 1.0);
  EXPECT_EQ(perturbative_linear_ntk(data.input_gram(), data.targets(), g, 0.1, 2).coefficient, 6.0);
  EXPECT_EQ(perturbative_linear_ntk(data.input_gram(), data.targets(), g, 0.1, 3).coefficient, 20.0);
}

TEST(Perturbative, LazyAndInitialTime) {
  const SampleSet data = testing::synthetic(3, 6, 6);
  const TimeGrid g(6, 0.1);
  const Eigen::MatrixXd kx = data.input_gram();
  const PerturbativeNtk lazy = perturbative_linear_ntk(kx, data.targets(), g, 0.0, 2);
  EXPECT_LT((lazy.ntk.values() - 3.0 * Kernel::constant_in_time(kx, g).values()).cwiseAbs().maxCoeff(), 1e-14);
  for (auto mode : {PerturbativeQuadrature::discrete, PerturbativeQuadrature::exact}) {
    const PerturbativeNtk p = perturbative_linear_ntk(kx, data.targets(), g, 0.7, 2, mode);
    EXPECT_LT((p.ntk.at_times(0, 0) - 3.0 * kx).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(p.functions.v.col(0).cwiseAbs().maxCoeff(), 0.0);
  }
}

double residual(const SampleSet& data, const TimeGrid& g, int L, double gamma0) {
  LinearConfig lc;
  lc.depth = L;
  lc.gamma0 = gamma0;
  lc.tol = 1e-13;
  lc.max_iters = 2000;
  const LinearDmftState full = linear_solve(lc, data, g);
  EXPECT_TRUE(full.converged);
  const PerturbativeNtk p = perturbative_linear_ntk(data.input_gram(), data.targets(), g, gamma0, L);
  return relative_frobenius(p.ntk.values(), full.ntk().values());
}

TEST(Perturbative, FourthOrderResidual) {
  const SampleSet data = testing::synthetic(2, 6, 7);
  const TimeGrid g(16, 0.1);
  const double r1 = residual(data, g, 2, 0.1), r2 = residual(data, g, 2, 0.05);
  EXPECT_GT(r1 / r2, 10.0);
  EXPECT_LT(r1 / r2, 22.0);
}

TEST(Perturbative, LayerCorrectionsMatchClosedFormSlope) {
  // (H_full - H_lazy) / gamma0^2 -> h2 as gamma0 -> 0.
  const SampleSet data = testing::synthetic(2, 6, 8);
  const TimeGrid g(10, 0.1);
  const int L = 3;
  const double gamma0 = 0.02;
  LinearConfig lc;
  lc.depth = L;
  lc.gamma0 = gamma0;
  lc.tol = 1e-14;
  lc.max_iters = 2000;
  const LinearDmftState full = linear_solve(lc, data, g);
  const PerturbativeNtk p = perturbative_linear_ntk(data.input_gram(), data.targets(), g, gamma0, L);
  const Eigen::MatrixXd h0 = Kernel::constant_in_time(data.input_gram(), g).values();
  for (int l = 1; l <= L; ++l) {
    const Eigen::MatrixXd slope = (full.h[l] - h0) / (gamma0 * gamma0);
    EXPECT_LT(relative_frobenius(slope, p.h2[l]), 0.01) << "layer " << l;
    const Eigen::MatrixXd gslope = (full.g[l] - Eigen::MatrixXd::Ones(10, 10)) / (gamma0 * gamma0);
    EXPECT_LT(relative_frobenius(gslope, p.g2[l]), 0.01) << "layer " << l;
  }
}

}  // namespace
}  // namespace dmft
