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
#include <string_view>

namespace dmft {

enum class Activation { linear, relu, tanh };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

// Degree of positive homogeneity (phi(c x) = c^k phi(x)); 0 when not homogeneous.
int homogeneity_degree(Activation a);

double phi(Activation a, double x);
double dphi(Activation a, double x);
// ReLU: the kink is ignored, phi'' = 0 everywhere.
double ddphi(Activation a, double x);

Eigen::ArrayXXd apply_phi(Activation a, const Eigen::ArrayXXd& x);
Eigen::ArrayXXd apply_dphi(Activation a, const Eigen::ArrayXXd& x);
Eigen::ArrayXXd apply_ddphi(Activation a, const Eigen::ArrayXXd& x);

}  // namespace dmft
