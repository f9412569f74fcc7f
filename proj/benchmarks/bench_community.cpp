#include <benchmark/benchmark.h>

#include "pdm/community.hpp"
#include "pdm/rng.hpp"

namespace {

// Planted blocks of 8 with dense strong intra edges and sparse weak inter edges.
pdm::FeatureGraph planted_graph(std::size_t n) {
  pdm::Rng rng(42);
  pdm::FeatureGraph g;
  g.target = "alarm";
  for (std::size_t i = 0; i < n; ++i) g.nodes.push_back({"f" + std::to_string(i), 1.0 + rng.uniform()});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool same = i / 8 == j / 8;
      if (rng.uniform() < (same ? 0.8 : 0.05)) g.edges.push_back({i, j, same ? 0.6 + 0.4 * rng.uniform() : 0.3 * rng.uniform()});
    }
  }
  return g;
}

void run(benchmark::State& state, pdm::Algorithm alg) {
  const auto g = planted_graph(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pdm::run_algorithm(alg, g, 7));
  state.SetLabel(std::to_string(g.edges.size()) + " edges");
}

void BM_Louvain(benchmark::State& s) { run(s, pdm::Algorithm::Louvain); }
void BM_Leiden(benchmark::State& s) { run(s, pdm::Algorithm::Leiden); }
void BM_InfoMap(benchmark::State& s) { run(s, pdm::Algorithm::InfoMap); }
void BM_FastGreedy(benchmark::State& s) { run(s, pdm::Algorithm::FastGreedy); }

void BM_Sweep(benchmark::State& state) {
  const auto g = planted_graph(static_cast<std::size_t>(state.range(0)));
  const auto ladder = pdm::default_threshold_ladder();
  const std::vector<pdm::Algorithm> algs(std::begin(pdm::kDefaultAlgorithms), std::end(pdm::kDefaultAlgorithms));
  for (auto _ : state) benchmark::DoNotOptimize(pdm::detect_dynamic(g, ladder, algs, 7));
}

}  // namespace

BENCHMARK(BM_Louvain)->Arg(32)->Arg(128)->Arg(512);
BENCHMARK(BM_Leiden)->Arg(32)->Arg(128)->Arg(512);
BENCHMARK(BM_InfoMap)->Arg(32)->Arg(128)->Arg(512);
BENCHMARK(BM_FastGreedy)->Arg(32)->Arg(128)->Arg(512);
BENCHMARK(BM_Sweep)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
