#include <benchmark/benchmark.h>

#include "pdm/rng.hpp"
#include "pdm/sampling.hpp"

namespace {

pdm::LabeledDataset telemetry(std::size_t n) {
  pdm::Rng rng(5);
  pdm::LabeledDataset d;
  d.feature_names = {"a", "b"};
  d.group = {-1, -1};
  for (std::size_t i = 0; i < n; ++i) {
    d.timestamps.push_back(static_cast<std::int64_t>(i));
    const int label = (i / 500) % 8 == 0 ? 1 : 0;
    d.y.push_back(label);
    d.X.append_row(std::vector<double>{rng.normal() + label, rng.normal()});
  }
  return d;
}

void BM_FindOptimalInterval(benchmark::State& state) {
  const auto d = telemetry(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pdm::find_optimal_interval(d, 2 * d.count(1), 1, 600, 1, 3));
}

void BM_SmoteEnn(benchmark::State& state) {
  const auto d = telemetry(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pdm::smoteenn(d.X, d.y, 5, 3, 9));
}

}  // namespace

BENCHMARK(BM_FindOptimalInterval)->Arg(20000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SmoteEnn)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
