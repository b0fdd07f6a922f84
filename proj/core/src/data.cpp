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

#include "dmft/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "dmft/error.hpp"
#include "dmft/gp_sample.hpp"

namespace dmft {

namespace {

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (size_t i = 0; i < fields.size(); ++i) numeric = numeric && parse_double(fields[i], row[i]);
    if (!numeric) {
      // A non-numeric first line is a header.
      if (rows.empty() && line_no == 1) continue;
      fail(ErrorKind::MalformedCsv, path.string() + ":" + std::to_string(line_no) +
                                        ": non-numeric field");
    }
    if (!rows.empty() && row.size() != rows.front().size())
      fail(ErrorKind::MalformedCsv, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                        std::to_string(rows.front().size()) + " columns, got " +
                                        std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), ErrorKind::MalformedCsv, path.string() + ": no data rows");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

Eigen::MatrixXd whiten_inputs(const Eigen::MatrixXd& x) {
  const Eigen::Index P = x.rows(), D = x.cols();
  require(D >= P, ErrorKind::DimensionMismatch, "whitening needs at least as many features as samples");
  const Eigen::MatrixXd gram = x * x.transpose() / static_cast<double>(D);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const Eigen::VectorXd lam = es.eigenvalues();
  require(lam.minCoeff() > 1e-10 * std::max(1.0, lam.maxCoeff()), ErrorKind::NonPsdGram,
          "cannot whiten a rank-deficient gram");
  const Eigen::MatrixXd inv_sqrt =
      es.eigenvectors() * lam.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  return inv_sqrt * x;
}

namespace {

Eigen::VectorXd read_targets(const std::filesystem::path& path) {
  const Eigen::MatrixXd m = read_csv_matrix(path);
  require(m.cols() == 1 || m.rows() == 1, ErrorKind::MalformedCsv,
          path.string() + ": targets must be a single column");
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

SampleSet load(const SyntheticData& s) {
  const int Pt = s.n_train + s.n_test;
  require(s.n_train >= 1 && s.n_test >= 0 && s.dim >= 1, ErrorKind::InvalidConfig,
          "synthetic data needs n_train >= 1, n_test >= 0, dim >= 1");
  auto rng = make_stream({s.seed, 0, 0, 0, 11});
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd x(Pt, s.dim);
  if (s.inputs == InputRule::basis) {
    require(s.dim >= Pt, ErrorKind::DimensionMismatch, "basis inputs need dim >= number of samples");
    x.setZero();
    for (int mu = 0; mu < Pt; ++mu) x(mu, mu) = std::sqrt(static_cast<double>(s.dim));
  } else {
    for (int mu = 0; mu < Pt; ++mu)
      for (int i = 0; i < s.dim; ++i) x(mu, i) = nd(rng);
  }
  if (s.whiten) x = whiten_inputs(x);
  Eigen::VectorXd y(s.n_train);
  if (s.target == TargetRule::explicit_values) {
    require(static_cast<int>(s.y.size()) == s.n_train, ErrorKind::DimensionMismatch,
            "explicit targets need one value per train sample");
    for (int mu = 0; mu < s.n_train; ++mu) y[mu] = s.y[mu];
  } else {
    Eigen::VectorXd beta(s.dim);
    for (int i = 0; i < s.dim; ++i) beta[i] = nd(rng);
    y = x.topRows(s.n_train) * beta / std::sqrt(static_cast<double>(s.dim));
    if (s.target == TargetRule::sign) y = y.unaryExpr([](double v) { return v >= 0 ? 1.0 : -1.0; });
  }
  return SampleSet::from_inputs(x, y, s.n_train);
}

SampleSet load(const CsvData& c) {
  Eigen::MatrixXd x = read_csv_matrix(c.inputs);
  const Eigen::VectorXd y = read_targets(c.targets);
  require(c.n_test >= 0 && y.size() + c.n_test == x.rows(), ErrorKind::DimensionMismatch,
          "inputs have " + std::to_string(x.rows()) + " rows but targets + n_test = " +
              std::to_string(y.size() + c.n_test));
  if (c.whiten) x = whiten_inputs(x);
  return SampleSet::from_inputs(x, y, static_cast<int>(y.size()));
}

SampleSet load(const GramData& g) {
  const Eigen::MatrixXd k = read_csv_matrix(g.gram);
  const Eigen::VectorXd y = read_targets(g.targets);
  require(k.rows() == k.cols(), ErrorKind::DimensionMismatch, "gram CSV must be square");
  require(y.size() + g.n_test == k.rows(), ErrorKind::DimensionMismatch,
          "gram size does not match targets + n_test");
  return SampleSet::from_gram(k, y, static_cast<int>(y.size()));
}

}  // namespace

SampleSet load_data(const DataSpec& spec) {
  return std::visit([](const auto& s) { return load(s); }, spec);
}

}  // namespace dmft
