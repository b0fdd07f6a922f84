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

#include "dmft/kernel_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <json.hpp>

#include "dmft/error.hpp"

namespace dmft {

namespace {

using nlohmann::json;

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
  return r;
}

const std::set<std::string>& reserved_keys() {
  static const std::set<std::string> keys = {"shape", "row_samples", "col_samples", "T", "dt",
                                             "name"};
  return keys;
}

}  // namespace

void write_kernel(const std::filesystem::path& path, const Kernel& k,
                  const std::map<std::string, std::string>& extra) {
  json header;
  header["shape"] = {k.values().rows(), k.values().cols()};
  header["row_samples"] = k.row_samples();
  header["col_samples"] = k.col_samples();
  header["T"] = k.grid().n_steps();
  header["dt"] = k.grid().dt();
  header["name"] = k.name();
  for (const auto& [key, value] : extra) {
    require(!reserved_keys().count(key), ErrorKind::InvalidConfig,
            "kernel header key '" + key + "' is reserved");
    header[key] = value;
  }
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << header.dump() << '\n';
  const auto& v = k.values();
  std::vector<std::uint64_t> row(v.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      const double x = v(i, j);
      std::uint64_t bits;
      std::memcpy(&bits, &x, sizeof bits);
      row[j] = to_little(bits);
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(std::uint64_t)));
  }
  require(out.good(), ErrorKind::Io, "failed writing " + path.string());
}

KernelFile read_kernel_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::Io, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    fail(ErrorKind::Io, path.string() + ": bad kernel header: " + e.what());
  }
  const auto rows = header.at("shape").at(0).get<Eigen::Index>();
  const auto cols = header.at("shape").at(1).get<Eigen::Index>();
  TimeGrid grid(header.at("T").get<int>(), header.at("dt").get<double>());
  Eigen::MatrixXd v(rows, cols);
  std::vector<std::uint64_t> row(cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(std::uint64_t)));
    require(in.good(), ErrorKind::Io, path.string() + ": truncated kernel payload");
    for (Eigen::Index j = 0; j < cols; ++j) {
      const std::uint64_t bits = to_little(row[j]);
      std::memcpy(&v(i, j), &bits, sizeof bits);
    }
  }
  std::map<std::string, std::string> extra;
  for (const auto& [key, value] : header.items())
    if (!reserved_keys().count(key)) extra[key] = value.is_string() ? value.get<std::string>() : value.dump();
  return {Kernel(std::move(v), header.at("row_samples").get<IndexSet>(),
                 header.at("col_samples").get<IndexSet>(), grid,
                 header.at("name").get<std::string>()),
          std::move(extra)};
}

void write_kernel_csv(const std::filesystem::path& path, const Kernel& k) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << "mu,t,alpha,s,value\n" << std::setprecision(17);
  const int T = k.n_steps();
  for (int mu = 0; mu < k.n_row_samples(); ++mu)
    for (int t = 0; t < T; ++t)
      for (int a = 0; a < k.n_col_samples(); ++a)
        for (int s = 0; s < T; ++s)
          out << k.row_samples()[mu] << ',' << k.grid().time(t) << ',' << k.col_samples()[a] << ','
              << k.grid().time(s) << ',' << k.at(mu, t, a, s) << '\n';
}

}  // namespace dmft
