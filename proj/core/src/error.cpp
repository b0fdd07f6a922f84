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

#include "dmft/error.hpp"

namespace dmft {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::FactorizationFailure: return "FactorizationFailure";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::ZeroNorm: return "ZeroNorm";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::SingularResolvent: return "SingularResolvent";
    case ErrorKind::QuadratureUnderflow: return "QuadratureUnderflow";
    case ErrorKind::MissingCheckpoint: return "MissingCheckpoint";
    case ErrorKind::MalformedCsv: return "MalformedCsv";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonPsdGram: return "NonPsdGram";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace dmft
