// Copyright 2026 The dmft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>
#include <random>

#include "dmft/data.hpp"
#include "dmft/grid.hpp"

namespace dmft::testing {

inline Eigen::MatrixXd random_psd(int n, std::uint64_t seed, double ridge = 0.1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Eigen::MatrixXd a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = nd(rng);
  return a * a.transpose() / n + ridge * Eigen::MatrixXd::Identity(n, n);
}

inline SampleSet synthetic(int p, int dim, std::uint64_t seed, int n_test = 0) {
  SyntheticData d;
  d.n_train = p;
  d.n_test = n_test;
  d.dim = dim;
  d.seed = seed;
  return load_data(d);
}

}  // namespace dmft::testing
