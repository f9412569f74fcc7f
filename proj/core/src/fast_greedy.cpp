#include <map>
#include <numeric>

#include "community_graph.hpp"

namespace pdm {

// Agglomerative modularity maximisation: repeatedly merge the adjacent pair
// of communities with the largest gain dQ = w_ij / m - 2 D_i D_j / (2m)^2.
CommunityPartition fast_greedy(const FeatureGraph& graph) {
  const std::size_t n = graph.node_count();
  Assignment assignment(n);
  std::iota(assignment.begin(), assignment.end(), std::size_t{0});
  const double m = graph.total_edge_weight();
  if (graph.edges.empty() || m <= 0.0) return detail::finish(graph, assignment, Algorithm::FastGreedy);

  const double volume = 2.0 * m;
  std::vector<std::map<std::size_t, double>> between(n);
  for (const auto& e : graph.edges) {
    between[e.u][e.v] += e.weight;
    between[e.v][e.u] += e.weight;
  }
  std::vector<double> degree = graph.weighted_degrees();
  std::vector<char> alive(n, 1);

  for (;;) {
    double best = 0.0;
    std::size_t bi = SIZE_MAX, bj = SIZE_MAX;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      for (auto it = between[i].upper_bound(i); it != between[i].end(); ++it) {
        const std::size_t j = it->first;
        const double gain = it->second / m - 2.0 * degree[i] * degree[j] / (volume * volume);
        if (gain > best + 1e-15) {
          best = gain;
          bi = i;
          bj = j;
        }
      }
    }
    if (bi == SIZE_MAX) break;
    for (const auto& [k, w] : between[bj]) {
      if (k == bi) continue;
      between[bi][k] += w;
      between[k][bi] += w;
      between[k].erase(bj);
    }
    between[bi].erase(bj);
    between[bj].clear();
    degree[bi] += degree[bj];
    alive[bj] = 0;
    for (auto& a : assignment) {
      if (a == bj) a = bi;
    }
  }
  return detail::finish(graph, std::move(assignment), Algorithm::FastGreedy);
}

}  // namespace pdm
