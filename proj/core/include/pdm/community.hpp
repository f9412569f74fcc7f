#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdm/graph.hpp"

namespace pdm {

/// Node index -> community id.
using Assignment = std::vector<std::size_t>;

enum class Algorithm { Leiden, InfoMap, FastGreedy, Louvain };

const char* to_string(Algorithm a) noexcept;
std::optional<Algorithm> parse_algorithm(std::string_view text);

/// The order the sweep tries algorithms in, which is also its tie-break.
inline constexpr Algorithm kDefaultAlgorithms[] = {Algorithm::Leiden, Algorithm::InfoMap, Algorithm::FastGreedy,
                                                   Algorithm::Louvain};

struct CommunityPartition {
  Assignment assignment;       // contiguous ids from 0, numbered by first appearance
  double modularity = 0.0;     // on the graph the partition was found on
  bool modularity_defined = true;  // false for edgeless graphs
  double threshold = 0.0;
  Algorithm algorithm = Algorithm::Louvain;

  std::size_t community_count() const;
  std::vector<std::vector<std::size_t>> members() const;
};

/// Relabels ids contiguously in order of first appearance.
Assignment normalize_assignment(std::span<const std::size_t> assignment);

/// Weighted modularity Q = sum_c (L_c / m - (D_c / 2m)^2). Throws
/// UndefinedModularityError when the graph has no edge weight.
double modularity(const FeatureGraph& graph, std::span<const std::size_t> assignment);

CommunityPartition louvain(const FeatureGraph& graph, std::uint64_t seed);
CommunityPartition leiden(const FeatureGraph& graph, std::uint64_t seed);
CommunityPartition fast_greedy(const FeatureGraph& graph);
CommunityPartition infomap(const FeatureGraph& graph, std::uint64_t seed);

CommunityPartition run_algorithm(Algorithm algorithm, const FeatureGraph& graph, std::uint64_t seed);

/// Random-walk visit rates by power iteration of the lazy walk, each
/// connected component carrying mass proportional to its volume. Isolated
/// nodes get 0.
std::vector<double> stationary_distribution(const FeatureGraph& graph, double tolerance = 1e-10);

/// Two-level map equation codelength (bits) of `assignment`.
double map_equation(const FeatureGraph& graph, std::span<const std::size_t> assignment);

struct SweepRow {
  double threshold = 0.0;
  Algorithm algorithm = Algorithm::Leiden;
  std::optional<double> modularity;  // empty when the thresholded graph has no edges
  std::size_t n_communities = 0;
};

struct SweepResult {
  CommunityPartition best;
  std::vector<SweepRow> table;
};

/// 0.10, 0.15, ..., 0.95.
std::vector<double> default_threshold_ladder();

/// Seed used for one (threshold, algorithm) cell of the sweep.
std::uint64_t sweep_cell_seed(std::uint64_t seed, double threshold, Algorithm algorithm);

/// Thresholds the graph at every ladder step, runs every algorithm on each
/// thresholded copy and keeps the highest-modularity partition. Ties keep
/// the earlier (threshold, algorithm) cell.
SweepResult detect_dynamic(const FeatureGraph& graph, std::span<const double> thresholds,
                           std::span<const Algorithm> algorithms, std::uint64_t seed, std::size_t jobs = 1);

/// Splits every community into its connected components.
Assignment split_disconnected(const FeatureGraph& graph, std::span<const std::size_t> assignment);

}  // namespace pdm
