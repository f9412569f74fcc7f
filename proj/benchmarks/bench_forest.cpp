#include <benchmark/benchmark.h>

#include "pdm/forest.hpp"
#include "pdm/rng.hpp"

namespace {

struct Data {
  pdm::Matrix X;
  std::vector<int> y;
};

Data make_data(std::size_t n, std::size_t d) {
  pdm::Rng rng(11);
  Data out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(d);
    for (auto& v : row) v = rng.normal();
    out.y.push_back(row[0] + 0.5 * row[1] > 0 ? 1 : 0);
    out.X.append_row(row);
  }
  return out;
}

void BM_TrainForest(benchmark::State& state) {
  const auto data = make_data(static_cast<std::size_t>(state.range(0)), 8);
  pdm::ForestParams p;
  p.n_trees = 50;
  for (auto _ : state) benchmark::DoNotOptimize(pdm::train_forest(data.X, data.y, p, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PredictForest(benchmark::State& state) {
  const auto data = make_data(2000, 8);
  pdm::ForestParams p;
  p.n_trees = 50;
  const auto model = pdm::train_forest(data.X, data.y, p, 1);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(data.X));
  state.SetItemsProcessed(state.iterations() * 2000);
}

}  // namespace

BENCHMARK(BM_TrainForest)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictForest)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
