// Copyright 2026 The dmft Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dmft/error.hpp"
#include "dmft/experiment.hpp"
#include "dmft/kernel_io.hpp"

namespace dmft {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dmft_exp_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorKind parse_error(const std::string& text) {
  try {
    parse_config(text, ".");
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;
}

const char* kSmallDmft = R"({
  "mode": "dmft",
  "grid": {"T": 4, "dt": 0.2},
  "data": {"synthetic": {"n_train": 3, "n_test": 1, "dim": 6, "seed": 2}},
  "solver": {"depth": 2, "gamma0": 1.0, "activation": "tanh", "n_mc": 200, "max_iters": 3, "tol": 1e-12},
  "output": "unused"
})";

TEST(Config, UnknownKeysRejected) {
  EXPECT_EQ(parse_error(R"({"mode": "dmft", "grid": {"T": 2, "dt": 0.1}, "colour": 1})"),
            ErrorKind::InvalidConfig);
  EXPECT_EQ(parse_error(R"({"mode": "dmft", "grid": {"T": 2, "dt": 0.1, "dT": 3}})"),
            ErrorKind::InvalidConfig);
  EXPECT_EQ(parse_error(R"({"mode": "dmft", "grid": {"T": 2, "dt": 0.1}, "solver": {"gama0": 1}})"),
            ErrorKind::InvalidConfig);
  EXPECT_EQ(parse_error(R"({"mode": "sgd", "grid": {"T": 2, "dt": 0.1}})"), ErrorKind::InvalidConfig);
  EXPECT_EQ(parse_error(R"({"grid": {"T": 2, "dt": 0.1}})"), ErrorKind::InvalidConfig);
  EXPECT_EQ(parse_error("{not json"), ErrorKind::InvalidConfig);
}

TEST(Config, ValidationPerMode) {
  // dmft without data
  EXPECT_EQ(parse_error(R"({"mode": "dmft", "grid": {"T": 2, "dt": 0.1}})"), ErrorKind::InvalidConfig);
  EXPECT_EQ(parse_error(R"({"mode": "two-layer", "grid": {"T": 2, "dt": -1}, "two_layer": {"y_norm": 1}})"),
            ErrorKind::InvalidConfig);
}

TEST(Config, SeedOverrideChangesEchoAndNetworkSeeds) {
  ExperimentConfig cfg = parse_config(kSmallDmft, ".");
  const std::string before = cfg.config_json;
  override_seed(cfg, 41);
  EXPECT_EQ(cfg.solver.seed, 41u);
  EXPECT_NE(cfg.config_json, before);
  EXPECT_NE(cfg.config_json.find("41"), std::string::npos);
}

TEST(Config, Fnv1a) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
}

TEST(Run, TwoLayerLazyLoss) {
  ExperimentConfig cfg = parse_config(R"({
    "mode": "two-layer", "grid": {"T": 101, "dt": 0.01},
    "solver": {"gamma0": 0.0}, "two_layer": {"y_norm": 1.0}})", ".");
  cfg.output_dir = scratch("two_layer");
  const RunResult r = run(cfg);
  EXPECT_EQ(r.exit_code, 0);
  std::ifstream in(cfg.output_dir / "loss.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "step,t,loss");
  int rows = 0;
  while (std::getline(in, line)) {
    int step;
    double t, loss;
    char c1, c2;
    std::istringstream ss(line);
    ss >> step >> c1 >> t >> c2 >> loss;
    EXPECT_NEAR(loss, 0.5 * std::exp(-4.0 * t), 1e-6) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 101);
  fs::remove_all(cfg.output_dir);
}

TEST(Run, ReproducibleBytesAndReport) {
  ExperimentConfig cfg = parse_config(kSmallDmft, ".");
  const fs::path a = scratch("rep_a"), b = scratch("rep_b");
  cfg.output_dir = a;
  const RunResult ra = run(cfg);
  cfg.output_dir = b;
  const RunResult rb = run(cfg);
  EXPECT_EQ(ra.exit_code, 2);  // tol 1e-12 is out of reach in three iterations
  ASSERT_EQ(ra.artifacts.size(), rb.artifacts.size());
  for (const auto& f : ra.artifacts) {
    const fs::path rel = fs::relative(f, a);
    EXPECT_EQ(slurp(a / rel), slurp(b / rel)) << rel;
  }
  for (const char* name : {"loss.csv", "preds.csv", "report.json", "ntk.kern", "phi1.kern", "g2.kern"})
    EXPECT_TRUE(fs::exists(a / name)) << name;
  const std::string rep = slurp(a / "report.json");
  for (const char* key : {"\"version\"", "\"config_hash\"", "\"seeds\"", "\"grid\"", "\"converged\": false",
                          "\"exit_code\": 2", "\"mode\": \"dmft\""})
    EXPECT_NE(rep.find(key), std::string::npos) << key;
  const Kernel k = read_kernel(a / "ntk.kern");
  EXPECT_EQ(k.grid().n_steps(), 4);
  EXPECT_EQ(k.values().rows(), 16);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Run, ConvergedDmftExitsZero) {
  ExperimentConfig cfg = parse_config(kSmallDmft, ".");
  cfg.solver.tol = 0.5;
  cfg.output_dir = scratch("conv");
  EXPECT_EQ(run(cfg).exit_code, 0);
  fs::remove_all(cfg.output_dir);
}

}  // namespace
}  // namespace dmft
