// Copyright 2026 The dmft Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "dmft/data.hpp"
#include "dmft/gp_sample.hpp"
#include "dmft/linear.hpp"
#include "dmft/saddle.hpp"
#include "dmft/static_kernels.hpp"

namespace {

using namespace dmft;

SampleSet data(int p) {
  SyntheticData s;
  s.n_train = p;
  s.dim = 20;
  s.seed = 1;
  return load_data(s);
}

// One outer iteration of the sampled solver; args: T, n_mc.
void BM_OuterIteration(benchmark::State& state) {
  const int T = static_cast<int>(state.range(0));
  DmftConfig cfg;
  cfg.depth = 2;
  cfg.activation = Activation::tanh;
  cfg.n_mc = static_cast<int>(state.range(1));
  const SampleSet d = data(10);
  for (auto _ : state) {
    state.PauseTiming();
    DmftSolver solver(cfg, d, TimeGrid(T, 0.05));
    state.ResumeTiming();
    benchmark::DoNotOptimize(solver.step());
  }
  state.SetComplexityN(T);
}
BENCHMARK(BM_OuterIteration)->Args({8, 500})->Args({16, 500})->Args({32, 500})
    ->Unit(benchmark::kMillisecond)->Complexity();

void BM_LinearSolve(benchmark::State& state) {
  LinearConfig cfg;
  cfg.depth = 3;
  cfg.gamma0 = 1.0;
  const SampleSet d = data(static_cast<int>(state.range(0)));
  const TimeGrid g(static_cast<int>(state.range(1)), 0.05);
  for (auto _ : state) benchmark::DoNotOptimize(linear_solve(cfg, d, g).iterations);
}
BENCHMARK(BM_LinearSolve)->Args({4, 16})->Args({10, 25})->Unit(benchmark::kMillisecond);

void BM_GpSample(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SampleSet d = data(n / 25);
  const Kernel cov = Kernel::constant_in_time(d.input_gram(), TimeGrid(25, 0.05));
  for (auto _ : state) benchmark::DoNotOptimize(gp_sample(cov, 1000, 7).size());
}
BENCHMARK(BM_GpSample)->Arg(100)->Arg(250)->Unit(benchmark::kMillisecond);

void BM_StaticKernels(benchmark::State& state) {
  const SampleSet d = data(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(static_kernels(Activation::tanh, d.input_gram(), 3).ntk(0, 0));
}
BENCHMARK(BM_StaticKernels)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
