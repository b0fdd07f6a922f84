// Copyright 2026 The dmft Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "dmft/error.hpp"
#include "dmft/reference_nn.hpp"
#include "dmft/static_kernels.hpp"
#include "support.hpp"

namespace dmft {
namespace {

NetworkConfig net_config(int width, int depth, Activation act, bool bias = false) {
  NetworkConfig c;
  c.width = width;
  c.depth = depth;
  c.activation = act;
  c.bias = bias;
  return c;
}

TEST(Mlp, MeasuredNtkMatchesParameterGradients) {
  for (bool bias : {false, true}) {
    const SampleSet data = testing::synthetic(3, 5, 1, 1);
    Mlp net(net_config(40, 3, Activation::tanh, bias), 5, 2);
    const Eigen::MatrixXd direct = parameter_space_ntk(net, *data.inputs());
    const TrainLog log = train(net, data, TimeGrid(1, 0.1), 0.1);
    const MeasuredKernels mk = measure_kernels(log);
    EXPECT_LT((mk.ntk.at_times(0, 0) - direct).cwiseAbs().maxCoeff(), 1e-10 * direct.norm())
        << "bias " << bias;
  }
}

double train_loss(const Mlp& net, const SampleSet& data) {
  const Mlp::Pass p = net.forward(*data.inputs());
  return loss_value(LossKind::mse, p.f.head(data.n_train()), data.targets());
}

TEST(Mlp, StepFollowsLossGradient) {
  const SampleSet data = testing::synthetic(3, 4, 3);
  Mlp net(net_config(6, 2, Activation::tanh, true), 4, 4);
  Mlp::Pass p = net.forward(*data.inputs());
  net.backward(p);
  const Eigen::VectorXd delta = loss_residual(LossKind::mse, p.f, data.targets());
  Mlp stepped = net;
  stepped.gd_step(*data.inputs(), p, delta, 1.0);
  const double g2 = net.gamma() * net.gamma(), eps = 1e-6;
  auto check = [&](double& entry, double stepped_entry) {
    const double keep = entry;
    entry = keep + eps;
    const double lp = train_loss(net, data);
    entry = keep - eps;
    const double lm = train_loss(net, data);
    entry = keep;
    EXPECT_NEAR(stepped_entry - keep, -g2 * (lp - lm) / (2 * eps), 1e-6 * g2);
  };
  check(net.w_in(1, 2), stepped.w_in(1, 2));
  check(net.w_hidden[0](3, 4), stepped.w_hidden[0](3, 4));
  check(net.w_out[5], stepped.w_out[5]);
  check(net.biases[0][2], stepped.biases[0][2]);
  check(net.biases[1][0], stepped.biases[1][0]);
}

TEST(Mlp, FirstStepFollowsNtk) {
  const SampleSet data = testing::synthetic(4, 8, 5);
  const double eta = 1e-4;
  Mlp net(net_config(64, 2, Activation::relu), 8, 6);
  const Eigen::MatrixXd K = parameter_space_ntk(net, *data.inputs());
  const TrainLog log = train(net, data, TimeGrid(2, eta), eta);
  const Eigen::VectorXd d0 = data.targets() - log.f.col(0);
  const Eigen::VectorXd expect = eta * K * d0;
  const Eigen::VectorXd got = log.f.col(1) - log.f.col(0);
  EXPECT_LT((got - expect).norm(), 1e-2 * expect.norm());
}

TEST(Mlp, FeatureKernelIsPsd) {
  const SampleSet data = testing::synthetic(4, 8, 7);
  Mlp net(net_config(50, 2, Activation::tanh), 8, 8);
  const MeasuredKernels mk = measure_kernels(train(net, data, TimeGrid(4, 0.1), 0.05));
  for (int l = 1; l <= 2; ++l) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mk.phi[l].values());
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-10);
  }
}

TEST(Mlp, WideLinearNetworkStartsAtInputKernel) {
  const SampleSet data = testing::synthetic(4, 10, 9);
  Mlp net(net_config(4000, 2, Activation::linear), 10, 10);
  const MeasuredKernels mk = measure_kernels(train(net, data, TimeGrid(1, 0.1), 0.1));
  for (int l = 1; l <= 2; ++l)
    EXPECT_LT(relative_frobenius(mk.phi[l].at_times(0, 0), data.input_gram()), 0.1) << l;
  EXPECT_LT(relative_frobenius(mk.g[1].at_times(0, 0), Eigen::MatrixXd::Ones(4, 4)), 0.1);
}

TEST(Mlp, WideNetworkMatchesStaticKernelsAtInit) {
  const SampleSet data = testing::synthetic(4, 10, 11);
  Mlp net(net_config(4000, 2, Activation::relu), 10, 12);
  const StaticKernels sk = static_kernels(Activation::relu, data.input_gram(), 2);
  EXPECT_LT(relative_frobenius(parameter_space_ntk(net, *data.inputs()), sk.ntk), 0.1);
}

TEST(Mlp, ErrorsAreTyped) {
  const SampleSet data = testing::synthetic(2, 4, 13);
  Mlp net(net_config(8, 1, Activation::tanh), 4, 14);
  TrainOptions opts;
  opts.log_fields = false;
  const TrainLog log = train(net, data, TimeGrid(3, 0.1), 0.1, opts);
  try {
    measure_kernels(log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingCheckpoint);
  }
  try {
    train(net, data, TimeGrid(3, 0.1), 0.03);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
  }
  try {
    net.forward(Eigen::MatrixXd::Ones(2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(Mlp, StrideRecordsEveryCheckpoint) {
  const SampleSet data = testing::synthetic(3, 6, 15);
  Mlp net(net_config(16, 1, Activation::tanh), 6, 16);
  const TrainLog log = train(net, data, TimeGrid(4, 0.2), 0.05);
  EXPECT_EQ(log.stride, 4);
  ASSERT_EQ(log.step_loss.size(), 13);
  for (int k = 0; k < 4; ++k) EXPECT_EQ(log.loss[k], log.step_loss[4 * k]);
  EXPECT_LT(log.loss[3], log.loss[0]);
}

}  // namespace
}  // namespace dmft
