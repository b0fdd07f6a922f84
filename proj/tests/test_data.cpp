// Copyright 2026 The dmft Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "dmft/data.hpp"
#include "dmft/error.hpp"

namespace dmft {
namespace {

namespace fs = std::filesystem;

class DataFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("dmft_data_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path write(const std::string& name, const std::string& body) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << body;
    return p;
  }
  static ErrorKind kind_of(const DataSpec& spec) {
    try {
      load_data(spec);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;  // sentinel, never expected below
  }
  fs::path dir_;
};

TEST(Synthetic, BasisInputsGiveIdentityGram) {
  SyntheticData s;
  s.n_train = 4;
  s.n_test = 2;
  s.dim = 9;
  s.inputs = InputRule::basis;
  const SampleSet d = load_data(s);
  EXPECT_LT((d.input_gram() - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(d.n_train(), 4);
  EXPECT_EQ(d.n_test(), 2);
}

TEST(Synthetic, WhitenedGramIsIdentity) {
  SyntheticData s;
  s.n_train = 7;
  s.dim = 12;
  s.whiten = true;
  const SampleSet d = load_data(s);
  EXPECT_LT((d.input_gram() - Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Synthetic, SeedsAndTargets) {
  SyntheticData s;
  s.n_train = 5;
  s.dim = 8;
  const SampleSet a = load_data(s), b = load_data(s);
  EXPECT_EQ(a.input_gram(), b.input_gram());
  s.seed = 1;
  EXPECT_NE(load_data(s).input_gram(), a.input_gram());
  s.target = TargetRule::sign;
  for (double v : load_data(s).targets()) EXPECT_EQ(std::abs(v), 1.0);
  s.target = TargetRule::explicit_values;
  s.y = {1, 2, 3};
  EXPECT_THROW(load_data(s), Error);
}

TEST(Whitening, InverseSquareRootOracle) {
  // Whitened rows span the same space; check (1/D) X' X'^T = I and X' = M X for some M.
  Eigen::MatrixXd x(3, 5);
  x << 1, 2, 0, -1, 3, 0, 1, 1, 2, -2, 4, 0, 1, 1, 1;
  const Eigen::MatrixXd w = whiten_inputs(x);
  EXPECT_LT((w * w.transpose() / 5.0 - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::MatrixXd m = w * x.transpose() * (x * x.transpose()).inverse();
  EXPECT_LT((m * x - w).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((m - m.transpose()).cwiseAbs().maxCoeff(), 1e-10);  // symmetric inverse square root
}

TEST_F(DataFiles, CsvRoundTripWithHeader) {
  CsvData c;
  c.inputs = write("x.csv", "a,b,c\n1,0,0\n0,1,0\n0,0,1\n");
  c.targets = write("y.csv", "1\n-1\n");
  c.n_test = 1;
  const SampleSet d = load_data(c);
  EXPECT_EQ(d.n_train(), 2);
  EXPECT_NEAR(d.input_gram()(0, 0), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(d.targets()[1], -1.0);
}

TEST_F(DataFiles, MalformedCsv) {
  CsvData c;
  c.targets = write("y.csv", "1\n2\n");
  c.inputs = write("ragged.csv", "1,2\n3\n");
  EXPECT_EQ(kind_of(c), ErrorKind::MalformedCsv);
  c.inputs = write("text.csv", "1,2\n3,abc\n");
  EXPECT_EQ(kind_of(c), ErrorKind::MalformedCsv);
  c.inputs = write("empty.csv", "\n");
  EXPECT_EQ(kind_of(c), ErrorKind::MalformedCsv);
}

TEST_F(DataFiles, DimensionMismatch) {
  CsvData c;
  c.inputs = write("x.csv", "1,2\n3,4\n5,6\n");
  c.targets = write("y.csv", "1\n2\n");
  EXPECT_EQ(kind_of(c), ErrorKind::DimensionMismatch);
  GramData g;
  g.gram = write("k.csv", "1,0\n0,1\n1,1\n");
  g.targets = write("y2.csv", "1\n");
  EXPECT_EQ(kind_of(g), ErrorKind::DimensionMismatch);
}

TEST_F(DataFiles, DuplicateRowsCannotBeWhitened) {
  CsvData c;
  c.inputs = write("x.csv", "1,2,3\n1,2,3\n");
  c.targets = write("y.csv", "1\n1\n");
  c.whiten = true;
  EXPECT_EQ(kind_of(c), ErrorKind::NonPsdGram);
  c.whiten = false;
  EXPECT_NO_THROW(load_data(c));
}

TEST_F(DataFiles, GramInput) {
  GramData g;
  g.gram = write("k.csv", "2,1\n1,2\n");
  g.targets = write("y.csv", "0.5\n");
  g.n_test = 1;
  const SampleSet d = load_data(g);
  EXPECT_FALSE(d.inputs().has_value());
  EXPECT_EQ(d.input_gram()(0, 1), 1.0);
  EXPECT_THROW(read_csv_matrix(dir_ / "missing.csv"), Error);
}

}  // namespace
}  // namespace dmft
