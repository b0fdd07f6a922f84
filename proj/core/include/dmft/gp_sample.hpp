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
#include <random>
#include <vector>

#include "dmft/kernel.hpp"

namespace dmft {

// Identifies an independent random substream. Streams are derived with
// std::seed_seq so every (seed, iteration, layer, sample, tag) tuple gets its
// own generator and results do not depend on scheduling.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
  std::uint64_t layer = 0;
  std::uint64_t sample = 0;
  std::uint64_t tag = 0;
};

std::mt19937_64 make_stream(const StreamKey& key);

// Cholesky factor of a covariance with escalating diagonal jitter
// (0, then 1e-10 ... 1e-6 times the largest diagonal entry).
class GaussianSampler {
 public:
  explicit GaussianSampler(const Eigen::MatrixXd& cov);

  Eigen::Index dim() const { return dim_; }
  double jitter() const { return jitter_; }
  const Eigen::MatrixXd& factor() const { return L_; }

  // Maps standard normal columns to correlated draws (L * xi).
  Eigen::MatrixXd correlate(const Eigen::MatrixXd& xi) const;
  Eigen::VectorXd draw(std::mt19937_64& rng) const;

 private:
  Eigen::Index dim_;
  double jitter_ = 0.0;
  bool zero_ = false;
  Eigen::MatrixXd L_;
};

void fill_standard_normal(std::mt19937_64& rng, Eigen::Ref<Eigen::VectorXd> out);

// Draws are the columns of the result; draw n uses stream {seed, 0, 0, n, 0}.
Eigen::MatrixXd gp_sample_matrix(const Eigen::MatrixXd& cov, int n_samples, std::uint64_t seed);

// Square kernel over (sample, time); each draw is returned as a Trajectory.
std::vector<Trajectory> gp_sample(const Kernel& cov, int n_samples, std::uint64_t seed);

}  // namespace dmft
