#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pdm/community.hpp"
#include "pdm/graph.hpp"
#include "pdm/matrix.hpp"
#include "pdm/stats.hpp"

namespace pdm {

/// L = D - A over the subgraph induced by `members`, rows in member order.
Matrix community_laplacian(const FeatureGraph& graph, std::span<const std::size_t> members);

/// SPEC(i) = F_i * sum_j lambda_j * u_j[i]^2 over the eigenpairs of the
/// community Laplacian, F_i taken from `relevance` (0 when absent).
std::map<std::string, double> spec_scores(const FeatureGraph& graph, std::span<const std::size_t> members,
                                          const TargetRelevance& relevance);

/// floor(sqrt(degree * node_weight * incident_weight)).
std::uint64_t kshell_value(std::size_t degree, double node_weight, double incident_weight);

struct KShellScore {
  std::uint64_t k_prime = 0;     // value on the whole community
  std::uint64_t shell_index = 0; // >= 1
  friend bool operator==(const KShellScore&, const KShellScore&) = default;
};

/// Modified K-shell decomposition: for s = 1, 2, ... repeatedly strip every
/// node whose k' (recomputed on the remaining nodes) is <= s and give it
/// shell s.
std::map<std::string, KShellScore> kshell_scores(const FeatureGraph& graph, std::span<const std::size_t> members,
                                                 const TargetRelevance& relevance);

struct CommunityScores {
  std::size_t community = 0;
  std::vector<std::string> members;
  std::map<std::string, double> spec;
  std::map<std::string, KShellScore> kshell;
};

std::vector<CommunityScores> score_partition(const FeatureGraph& graph, const CommunityPartition& partition,
                                             const TargetRelevance& relevance, std::size_t jobs = 1);

struct SelectedFeature {
  std::string name;
  std::size_t community = 0;
  double spec = 0.0;
  std::uint64_t shell_index = 0;
  std::uint64_t k_prime = 0;
  std::string rule;  // "max-spec" | "kshell-tiebreak" | "top-k"
};

struct Exclusion {
  std::string name;
  std::string reason;
};

struct SelectedFeatureSet {
  std::string target;
  std::vector<SelectedFeature> features;
  std::vector<Exclusion> exclusions;

  std::vector<std::string> names() const;
};

/// Per community: highest SPEC first, ties (relative 1e-9) broken by shell
/// index, then k', then name. Zero-SPEC features are never selected.
/// Exclusion patterns are applied last.
SelectedFeatureSet select_distinctive(const std::string& target, const CommunityPartition& partition,
                                      const std::vector<CommunityScores>& scores,
                                      std::span<const std::string> exclusion_patterns,
                                      std::size_t per_community = 1);

/// Ascending eigenvalues of the whole-graph Laplacian.
std::vector<double> laplacian_spectrum(const FeatureGraph& graph);

/// Euclidean distance between ascending Laplacian spectra; the shorter one
/// is padded with leading zeros (the spectrum of extra isolated nodes).
double spectral_similarity(const FeatureGraph& a, const FeatureGraph& b);

}  // namespace pdm
