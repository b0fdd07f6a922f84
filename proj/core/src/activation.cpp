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

#include "dmft/activation.hpp"

#include <cmath>
#include <string>

#include "dmft/error.hpp"

namespace dmft {

Activation parse_activation(std::string_view name) {
  if (name == "linear") return Activation::linear;
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  fail(ErrorKind::InvalidConfig, "unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

int homogeneity_degree(Activation a) { return a == Activation::tanh ? 0 : 1; }

double phi(Activation a, double x) {
  switch (a) {
    case Activation::linear: return x;
    case Activation::relu: return x > 0 ? x : 0.0;
    case Activation::tanh: return std::tanh(x);
  }
  return 0;
}

double dphi(Activation a, double x) {
  switch (a) {
    case Activation::linear: return 1.0;
    case Activation::relu: return x > 0 ? 1.0 : 0.0;
    case Activation::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
  }
  return 0;
}

double ddphi(Activation a, double x) {
  if (a != Activation::tanh) return 0.0;
  const double t = std::tanh(x);
  return -2.0 * t * (1.0 - t * t);
}

Eigen::ArrayXXd apply_phi(Activation a, const Eigen::ArrayXXd& x) {
  switch (a) {
    case Activation::linear: return x;
    case Activation::relu: return x.max(0.0);
    case Activation::tanh: return x.tanh();
  }
  return x;
}

Eigen::ArrayXXd apply_dphi(Activation a, const Eigen::ArrayXXd& x) {
  switch (a) {
    case Activation::linear: return Eigen::ArrayXXd::Ones(x.rows(), x.cols());
    case Activation::relu: return (x > 0.0).cast<double>();
    case Activation::tanh: return 1.0 - x.tanh().square();
  }
  return x;
}

Eigen::ArrayXXd apply_ddphi(Activation a, const Eigen::ArrayXXd& x) {
  if (a != Activation::tanh) return Eigen::ArrayXXd::Zero(x.rows(), x.cols());
  const Eigen::ArrayXXd t = x.tanh();
  return -2.0 * t * (1.0 - t.square());
}

}  // namespace dmft
