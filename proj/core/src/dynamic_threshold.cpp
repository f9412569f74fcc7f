#include <bit>
#include <cmath>

#include "pdm/community.hpp"
#include "pdm/error.hpp"
#include "pdm/parallel.hpp"
#include "pdm/rng.hpp"

namespace pdm {

std::vector<double> default_threshold_ladder() {
  std::vector<double> ladder;
  for (int step = 10; step <= 95; step += 5) ladder.push_back(step / 100.0);
  return ladder;
}

std::uint64_t sweep_cell_seed(std::uint64_t seed, double threshold, Algorithm algorithm) {
  const auto cell = mix_seed(std::bit_cast<std::uint64_t>(threshold) ^
                             (static_cast<std::uint64_t>(algorithm) + 1) * 0x9e3779b97f4a7c15ULL);
  return seed ^ cell;
}

SweepResult detect_dynamic(const FeatureGraph& graph, std::span<const double> thresholds,
                           std::span<const Algorithm> algorithms, std::uint64_t seed, std::size_t jobs) {
  if (thresholds.empty()) throw ValidationError("threshold ladder is empty");
  if (algorithms.empty()) throw ValidationError("algorithm list is empty");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] >= 0.0 && thresholds[i] <= 1.0)) throw ValidationError("thresholds must lie in [0, 1]");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1])) throw ValidationError("thresholds must be ascending");
  }

  std::vector<FeatureGraph> thresholded;
  thresholded.reserve(thresholds.size());
  for (double t : thresholds) thresholded.push_back(remove_edges(graph, t));

  const std::size_t cells = thresholds.size() * algorithms.size();
  std::vector<std::optional<CommunityPartition>> found(cells);
  parallel_for(cells, jobs, [&](std::size_t cell) {
    const std::size_t ti = cell / algorithms.size();
    const Algorithm algo = algorithms[cell % algorithms.size()];
    const auto& g = thresholded[ti];
    if (g.edges.empty()) return;
    auto p = run_algorithm(algo, g, sweep_cell_seed(seed, thresholds[ti], algo));
    p.threshold = thresholds[ti];
    found[cell] = std::move(p);
  });

  SweepResult result;
  std::optional<std::size_t> winner;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    SweepRow row;
    row.threshold = thresholds[cell / algorithms.size()];
    row.algorithm = algorithms[cell % algorithms.size()];
    if (found[cell]) {
      row.modularity = found[cell]->modularity;
      row.n_communities = found[cell]->community_count();
      if (!winner || found[cell]->modularity > found[*winner]->modularity) winner = cell;
    } else {
      row.n_communities = graph.node_count();
    }
    result.table.push_back(row);
  }
  if (!winner) throw NoStructureError("every thresholded graph is edgeless");
  result.best = std::move(*found[*winner]);
  return result;
}

}  // namespace pdm
