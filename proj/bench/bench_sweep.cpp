// OpenMP kernels against their serial references.
//
//   bench_sweep --benchmark_filter=Sweep

#include <benchmark/benchmark.h>

#include "lwqos/experiment.hpp"
#include "lwqos/sweep.hpp"

using namespace lwqos;

namespace {

SimConfig sweep_base() {
  SimConfig cfg;
  cfg.scenario.plan = eu868_default().subset({"G", "G1", "G2"});
  cfg.scenario.traffic.devices = 20;
  cfg.duration = 2e5;
  return cfg;
}

const std::vector<double>& sweep_grid() {
  static const std::vector<double> grid = log_grid(1e-5, 2e-4, 8);
  return grid;
}

Scenario analyze_scenario() {
  Scenario sc;
  sc.plan = eu868_default();
  return sc;
}

void BM_SweepSerial(benchmark::State& state) {
  const SimConfig cfg = sweep_base();
  SweepOptions opt;
  opt.replications = 4;
  for (auto _ : state) benchmark::DoNotOptimize(sweep_serial(cfg, sweep_grid(), opt));
}

void BM_SweepParallel(benchmark::State& state) {
  const SimConfig cfg = sweep_base();
  SweepOptions opt;
  opt.replications = 4;
  for (auto _ : state) benchmark::DoNotOptimize(sweep(cfg, sweep_grid(), opt));
}

void BM_AnalyzeSerial(benchmark::State& state) {
  const Scenario sc = analyze_scenario();
  const auto grid = log_grid(1e-5, 5e-2, 64);
  for (auto _ : state) benchmark::DoNotOptimize(analyze_serial(sc, grid, {}));
}

void BM_AnalyzeParallel(benchmark::State& state) {
  const Scenario sc = analyze_scenario();
  const auto grid = log_grid(1e-5, 5e-2, 64);
  for (auto _ : state) benchmark::DoNotOptimize(analyze(sc, grid, {}));
}

}  // namespace

BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SweepParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_AnalyzeSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_AnalyzeParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
