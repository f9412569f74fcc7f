#include <numeric>

#include "community_graph.hpp"

namespace pdm {
namespace {

// Refinement: inside every community of `partition`, start from singletons
// and greedily merge well-connected singleton nodes into well-connected
// refined clusters they are adjacent to. Merges only follow edges, so every
// refined cluster induces a connected subgraph.
Assignment refine(const detail::WorkGraph& g, const Assignment& partition, Rng& rng) {
  const std::size_t n = g.size();
  Assignment refined(n);
  std::iota(refined.begin(), refined.end(), std::size_t{0});
  std::vector<double> community_volume(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) community_volume[partition[v]] += g.degree[v];
  std::vector<double> cluster_volume = g.degree;
  std::vector<double> external(n, 0.0);  // weight from cluster to the rest of its community
  std::vector<std::size_t> cluster_size(n, 1);
  for (std::size_t v = 0; v < n; ++v) {
    for (const auto& [u, w] : g.adj[v]) {
      if (partition[u] == partition[v]) external[v] += w;
    }
  }

  std::vector<double> weight_to(n, 0.0);
  std::vector<std::size_t> touched;
  for (auto v : detail::shuffled_order(n, rng)) {
    if (cluster_size[refined[v]] != 1) continue;
    const auto c = partition[v];
    const double k = g.degree[v];
    const double total = community_volume[c];
    if (external[v] < k * (total - k) / g.volume) continue;
    for (const auto& [u, w] : g.adj[v]) {
      if (partition[u] != c) continue;
      const auto t = refined[u];
      if (t == refined[v]) continue;
      if (weight_to[t] == 0.0) touched.push_back(t);
      weight_to[t] += w;
    }
    std::size_t best = refined[v];
    double best_gain = 0.0;
    for (auto t : touched) {
      const double kt = cluster_volume[t];
      if (external[t] < kt * (total - kt) / g.volume) continue;
      const double gain = weight_to[t] - kt * k / g.volume;
      if (gain > best_gain + 1e-13) {
        best_gain = gain;
        best = t;
      }
    }
    if (best != refined[v]) {
      const auto old = refined[v];
      external[best] += external[old] - 2.0 * weight_to[best];
      cluster_volume[best] += k;
      cluster_volume[old] = 0.0;
      cluster_size[best] += 1;
      cluster_size[old] = 0;
      refined[v] = best;
    }
    for (auto t : touched) weight_to[t] = 0.0;
    touched.clear();
  }
  return refined;
}

}  // namespace

CommunityPartition leiden(const FeatureGraph& graph, std::uint64_t seed) {
  const std::size_t n = graph.node_count();
  Assignment membership(n);
  std::iota(membership.begin(), membership.end(), std::size_t{0});
  if (graph.edges.empty()) return detail::finish(graph, membership, Algorithm::Leiden);

  Rng rng(seed);
  auto level = detail::WorkGraph::from(graph);
  Assignment partition = membership;
  for (int depth = 0; depth < 64; ++depth) {
    detail::modularity_local_moving(level, partition, rng, true);
    const std::size_t count = detail::renumber(partition);
    if (count == level.size()) break;
    Assignment refined = refine(level, partition, rng);
    const std::size_t refined_count = detail::renumber(refined);
    if (refined_count == level.size()) break;  // nothing to aggregate
    Assignment next(refined_count);
    for (std::size_t v = 0; v < level.size(); ++v) next[refined[v]] = partition[v];
    for (auto& m : membership) m = refined[m];
    level = level.aggregate(refined, refined_count);
    partition = std::move(next);
  }
  Assignment result(n);
  for (std::size_t v = 0; v < n; ++v) result[v] = partition[membership[v]];
  return detail::finish(graph, split_disconnected(graph, result), Algorithm::Leiden);
}

}  // namespace pdm
