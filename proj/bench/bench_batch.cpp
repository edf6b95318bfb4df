#include <benchmark/benchmark.h>

#include "kepod/harness.hpp"
#include "kepod/solver.hpp"

using namespace kepod;

namespace {

BatchConfig batch(std::uint64_t n) {
  BatchConfig cfg;
  cfg.n = n;
  cfg.seed = 7;
  return cfg;
}

void BM_BatchSerial(benchmark::State& state) {
  const BatchConfig cfg = batch(static_cast<std::uint64_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_batch_serial(cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchParallel(benchmark::State& state) {
  const BatchConfig cfg = batch(static_cast<std::uint64_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_batch(cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SolveOne(benchmark::State& state) {
  const ODInput in = generate_case(HarnessConfig{}, 7, 0).input;
  for (auto _ : state) benchmark::DoNotOptimize(solve(in));
}

}  // namespace

BENCHMARK(BM_BatchSerial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchParallel)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SolveOne)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
