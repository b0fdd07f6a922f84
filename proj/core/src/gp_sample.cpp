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

#include "dmft/gp_sample.hpp"

#include <array>

#include "dmft/error.hpp"

namespace dmft {

std::mt19937_64 make_stream(const StreamKey& key) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(key.seed),      hi(key.seed),  lo(key.iteration), hi(key.iteration),
                    lo(key.layer),     hi(key.layer), lo(key.sample),    hi(key.sample),
                    lo(key.tag),       hi(key.tag)};
  return std::mt19937_64(seq);
}

void fill_standard_normal(std::mt19937_64& rng, Eigen::Ref<Eigen::VectorXd> out) {
  std::normal_distribution<double> nd(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = nd(rng);
}

GaussianSampler::GaussianSampler(const Eigen::MatrixXd& cov) : dim_(cov.rows()) {
  require(cov.rows() == cov.cols(), ErrorKind::ShapeMismatch, "covariance must be square");
  require(cov.allFinite(), ErrorKind::NonFiniteValue, "covariance has non-finite entries");
  const double scale = cov.diagonal().cwiseAbs().maxCoeff();
  if (dim_ == 0 || scale == 0.0) {
    zero_ = true;
    return;
  }
  static constexpr std::array<double, 6> kJitter = {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
  for (double eps : kJitter) {
    Eigen::MatrixXd a = cov;
    a.diagonal().array() += eps * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      L_ = llt.matrixL();
      jitter_ = eps * scale;
      return;
    }
  }
  fail(ErrorKind::FactorizationFailure,
       "covariance of size " + std::to_string(dim_) + " not factorizable with jitter up to 1e-6");
}

Eigen::MatrixXd GaussianSampler::correlate(const Eigen::MatrixXd& xi) const {
  require(xi.rows() == dim_, ErrorKind::ShapeMismatch, "standard normal block has wrong rows");
  if (zero_) return Eigen::MatrixXd::Zero(dim_, xi.cols());
  return L_.triangularView<Eigen::Lower>() * xi;
}

Eigen::VectorXd GaussianSampler::draw(std::mt19937_64& rng) const {
  Eigen::VectorXd xi(dim_);
  fill_standard_normal(rng, xi);
  return correlate(xi);
}

Eigen::MatrixXd gp_sample_matrix(const Eigen::MatrixXd& cov, int n_samples, std::uint64_t seed) {
  require(n_samples >= 0, ErrorKind::InvalidConfig, "negative sample count");
  GaussianSampler sampler(cov);
  Eigen::MatrixXd xi(cov.rows(), n_samples);
#pragma omp parallel for schedule(static)
  for (int n = 0; n < n_samples; ++n) {
    auto rng = make_stream({seed, 0, 0, static_cast<std::uint64_t>(n), 0});
    fill_standard_normal(rng, xi.col(n));
  }
  return sampler.correlate(xi);
}

std::vector<Trajectory> gp_sample(const Kernel& cov, int n_samples, std::uint64_t seed) {
  require(cov.n_row_samples() == cov.n_col_samples(), ErrorKind::ShapeMismatch,
          "gp_sample needs a square kernel");
  const Eigen::MatrixXd draws = gp_sample_matrix(cov.values(), n_samples, seed);
  std::vector<Trajectory> out;
  out.reserve(n_samples);
  for (int n = 0; n < n_samples; ++n)
    out.push_back(Trajectory::unflatten(draws.col(n), cov.n_row_samples(), cov.grid()));
  return out;
}

}  // namespace dmft
