#include <numeric>

#include "community_graph.hpp"

namespace pdm {

CommunityPartition louvain(const FeatureGraph& graph, std::uint64_t seed) {
  const std::size_t n = graph.node_count();
  Assignment membership(n);
  std::iota(membership.begin(), membership.end(), std::size_t{0});
  if (graph.edges.empty()) return detail::finish(graph, membership, Algorithm::Louvain);

  Rng rng(seed);
  auto level = detail::WorkGraph::from(graph);
  for (int depth = 0; depth < 64; ++depth) {
    Assignment community(level.size());
    std::iota(community.begin(), community.end(), std::size_t{0});
    if (!detail::modularity_local_moving(level, community, rng, false)) break;
    const std::size_t count = detail::renumber(community);
    for (auto& m : membership) m = community[m];
    if (count == level.size()) break;
    level = level.aggregate(community, count);
  }
  return detail::finish(graph, std::move(membership), Algorithm::Louvain);
}

}  // namespace pdm
