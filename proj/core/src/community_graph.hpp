#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "pdm/community.hpp"
#include "pdm/rng.hpp"

namespace pdm::detail {

/// Working graph for the multilevel heuristics. Aggregated levels carry
/// self-loops; `self[i]` is the summed weight of edges inside node i.
struct WorkGraph {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj;
  std::vector<double> self;
  std::vector<double> degree;  // incident weight, self-loops counted twice
  double volume = 0.0;         // sum of degrees = 2m

  std::size_t size() const noexcept { return adj.size(); }

  static WorkGraph from(const FeatureGraph& graph);
  /// Collapses each community (ids 0..count-1) into one node.
  WorkGraph aggregate(const Assignment& community, std::size_t count) const;
};

/// Renumbers in place; returns the community count.
std::size_t renumber(Assignment& a);

std::vector<std::size_t> shuffled_order(std::size_t n, Rng& rng);

/// Louvain-style local moving for modularity. Returns true if any node
/// moved. `allow_empty` lets a node leave for a fresh community.
bool modularity_local_moving(const WorkGraph& g, Assignment& community, Rng& rng, bool allow_empty);

CommunityPartition finish(const FeatureGraph& graph, Assignment assignment, Algorithm algorithm);

}  // namespace pdm::detail
