#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdm/stats.hpp"
#include "pdm/table.hpp"

namespace pdm {

struct GraphNode {
  std::string name;
  double weight = 0.0;  // ANOVA F against the graph's target
  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

/// Undirected edge between node indices, u < v.
struct GraphEdge {
  std::size_t u = 0;
  std::size_t v = 0;
  double weight = 0.0;
  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

/// Weighted undirected feature graph for one target alarm. Nodes are kept
/// sorted by name and edges by (u, v); no self-loops, one edge per pair.
struct FeatureGraph {
  std::string target;
  FeatureKind kind = FeatureKind::Continuous;
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  std::vector<std::string> warnings;

  std::size_t node_count() const noexcept { return nodes.size(); }
  std::optional<std::size_t> find(std::string_view name) const;
  double total_edge_weight() const;
  /// Sum of incident edge weights per node.
  std::vector<double> weighted_degrees() const;

  friend bool operator==(const FeatureGraph& a, const FeatureGraph& b) {
    return a.target == b.target && a.kind == b.kind && a.nodes == b.nodes && a.edges == b.edges;
  }
};

/// One node per feature of `assoc`, an edge for every nonzero association
/// (Pearson enters as |r|). Features absent from `relevance` get weight 0
/// and a warning.
FeatureGraph build_feature_graph(const AssociationMatrix& assoc, const TargetRelevance& relevance);

/// Copy without the edges of weight < threshold. Nodes are untouched.
FeatureGraph remove_edges(const FeatureGraph& graph, double threshold);

/// Subgraph induced by `members` (node indices of `graph`). Node order
/// stays sorted by name.
FeatureGraph induced_subgraph(const FeatureGraph& graph, std::vector<std::size_t> members);

enum class GraphFormat { GraphML, Dot, Json };

std::optional<GraphFormat> parse_graph_format(std::string_view text);

std::string to_graphml(const FeatureGraph& graph);
std::string to_dot(const FeatureGraph& graph);
std::string to_json_text(const FeatureGraph& graph);
FeatureGraph graph_from_json_text(std::string_view text);

void export_graph(const FeatureGraph& graph, GraphFormat format, const std::filesystem::path& path);
FeatureGraph read_graph_json(const std::filesystem::path& path);

}  // namespace pdm
