#include <benchmark/benchmark.h>

#include "pdm/linalg.hpp"
#include "pdm/rng.hpp"

namespace {

pdm::Matrix random_laplacian(std::size_t n) {
  pdm::Rng rng(3);
  pdm::Matrix l(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.uniform() < 0.5) {
        const double w = rng.uniform();
        l(i, j) = l(j, i) = -w;
        l(i, i) += w;
        l(j, j) += w;
      }
    }
  }
  return l;
}

void BM_JacobiEigen(benchmark::State& state) {
  const auto l = random_laplacian(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pdm::symmetric_eigen(l));
  state.SetComplexityN(state.range(0));
}

}  // namespace

BENCHMARK(BM_JacobiEigen)->RangeMultiplier(2)->Range(4, 128)->Complexity(benchmark::oNCubed);

BENCHMARK_MAIN();
