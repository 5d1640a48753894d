// Serial reference vs OpenMP executor on identical workloads.

#include <benchmark/benchmark.h>

#include <omp.h>

#include <algorithm>

#include "qgs/overshoot.hpp"
#include "qgs/process.hpp"

namespace {

qgs::RuleConfig workload(double beta, std::uint64_t k_max, std::uint64_t n_paths) {
  qgs::RuleConfig c;
  c.beta = beta;
  c.k_max = k_max;
  c.checkpoints = {k_max / 100, k_max / 10, k_max};
  c.n_paths = n_paths;
  c.seed = 1;
  return c;
}

struct Fixture {
  qgs::OvershootFunctional fn;
  qgs::GFunctional g;
  explicit Fixture(qgs::TailModel m) : fn(std::move(m)), g(fn) {}
};

const Fixture& stretched2() {
  static const Fixture f(qgs::TailModel::stretched(2.0));
  return f;
}

const Fixture& normal() {
  static const Fixture f(qgs::TailModel::normal());
  return f;
}

void BM_Serial(benchmark::State& state, const Fixture& (*fixture)()) {
  const Fixture& f = fixture();
  const auto cfg = workload(1.0, static_cast<std::uint64_t>(state.range(0)), 64);
  for (auto _ : state) benchmark::DoNotOptimize(qgs::run_paths_serial(cfg, f.fn, &f.g));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.n_paths * cfg.k_max));
}

void BM_Parallel(benchmark::State& state, const Fixture& (*fixture)()) {
  const Fixture& f = fixture();
  const auto cfg = workload(1.0, static_cast<std::uint64_t>(state.range(0)), 64);
  const auto workers = static_cast<unsigned>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(qgs::run_paths(cfg, f.fn, &f.g, workers));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cfg.n_paths * cfg.k_max));
  state.counters["workers"] = static_cast<double>(workers);
}

void worker_args(benchmark::internal::Benchmark* b) {
  const int max_workers = std::max(4, omp_get_max_threads());
  for (int w = 1; w <= max_workers; w *= 2) b->Args({10000, w});
  if ((max_workers & (max_workers - 1)) != 0) b->Args({10000, max_workers});
}

}  // namespace

BENCHMARK_CAPTURE(BM_Serial, stretched2, stretched2)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_Parallel, stretched2, stretched2)->Apply(worker_args)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_Serial, normal, normal)->Arg(10000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(BM_Parallel, normal, normal)->Apply(worker_args)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
