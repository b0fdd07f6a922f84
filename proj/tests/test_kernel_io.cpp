// Copyright 2026 The dmft Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "dmft/error.hpp"
#include "dmft/kernel_io.hpp"
#include "support.hpp"

namespace dmft {
namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "dmft_kernel_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

Kernel sample_kernel() {
  const TimeGrid g(3, 0.125);
  return Kernel(testing::random_psd(6, 5), IndexSet{4, 9}, IndexSet{4, 9}, g, "phi2");
}

TEST(KernelIo, BinaryRoundTrip) {
  const Kernel k = sample_kernel();
  const auto path = scratch("rt.kern");
  write_kernel(path, k, {{"scheme", "mc"}});
  const KernelFile back = read_kernel_file(path);
  EXPECT_EQ(back.kernel.values(), k.values());  // bit exact
  EXPECT_EQ(back.kernel.row_samples(), k.row_samples());
  EXPECT_EQ(back.kernel.grid(), k.grid());
  EXPECT_EQ(back.kernel.name(), "phi2");
  EXPECT_EQ(back.extra.at("scheme"), "mc");
}

TEST(KernelIo, HeaderThenLittleEndianPayload) {
  const Kernel k = sample_kernel();
  const auto path = scratch("layout.kern");
  write_kernel(path, k);
  std::ifstream in(path, std::ios::binary);
  std::string line;
  std::getline(in, line);
  const auto h = nlohmann::json::parse(line);
  EXPECT_EQ(h.at("shape"), nlohmann::json({6, 6}));
  EXPECT_EQ(h.at("T").get<int>(), 3);
  EXPECT_DOUBLE_EQ(h.at("dt").get<double>(), 0.125);
  EXPECT_EQ(h.at("name").get<std::string>(), "phi2");
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[i];
  double first;
  std::memcpy(&first, &bits, 8);
  EXPECT_EQ(first, k.values()(0, 0));
  EXPECT_EQ(std::filesystem::file_size(path), line.size() + 1 + 36 * 8);
}

TEST(KernelIo, ReservedKeysRejected) {
  EXPECT_THROW(write_kernel(scratch("bad.kern"), sample_kernel(), {{"T", "4"}}), Error);
}

TEST(KernelIo, TruncatedPayload) {
  const auto path = scratch("trunc.kern");
  write_kernel(path, sample_kernel());
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
  try {
    read_kernel(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}

TEST(KernelIo, CsvExport) {
  const Kernel k = sample_kernel();
  const auto path = scratch("k.csv");
  write_kernel_csv(path, k);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "mu,t,alpha,s,value");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 36);
}

}  // namespace
}  // namespace dmft
