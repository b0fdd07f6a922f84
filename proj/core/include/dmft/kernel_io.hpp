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

#include <filesystem>
#include <map>
#include <string>

#include "dmft/kernel.hpp"

namespace dmft {

// One-line JSON header {shape, row_samples, col_samples, T, dt, name, ...extra}
// followed by a newline and the little-endian float64 payload in row-major order.
void write_kernel(const std::filesystem::path& path, const Kernel& k,
                  const std::map<std::string, std::string>& extra = {});

struct KernelFile {
  Kernel kernel;
  std::map<std::string, std::string> extra;
};

KernelFile read_kernel_file(const std::filesystem::path& path);
inline Kernel read_kernel(const std::filesystem::path& path) {
  return read_kernel_file(path).kernel;
}

// Columns: mu,t,alpha,s,value (one row per entry), for small kernels.
void write_kernel_csv(const std::filesystem::path& path, const Kernel& k);

}  // namespace dmft
