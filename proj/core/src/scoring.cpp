#include "pdm/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "pdm/error.hpp"
#include "pdm/ingest.hpp"
#include "pdm/linalg.hpp"
#include "pdm/parallel.hpp"

namespace pdm {

Matrix community_laplacian(const FeatureGraph& graph, std::span<const std::size_t> members) {
  if (members.empty()) throw EmptyCommunityError("community has no members");
  const std::size_t k = members.size();
  std::vector<std::size_t> local(graph.node_count(), SIZE_MAX);
  for (std::size_t i = 0; i < k; ++i) {
    if (members[i] >= graph.node_count()) throw SchemaError("member index outside the graph");
    local[members[i]] = i;
  }
  Matrix l(k, k);
  for (const auto& e : graph.edges) {
    const auto a = local[e.u];
    const auto b = local[e.v];
    if (a == SIZE_MAX || b == SIZE_MAX) continue;
    l(a, b) -= e.weight;
    l(b, a) -= e.weight;
    l(a, a) += e.weight;
    l(b, b) += e.weight;
  }
  return l;
}

namespace {

double relevance_of(const TargetRelevance& relevance, const std::string& name) {
  auto it = relevance.scores.find(name);
  return it == relevance.scores.end() ? 0.0 : it->second;
}

}  // namespace

std::map<std::string, double> spec_scores(const FeatureGraph& graph, std::span<const std::size_t> members,
                                          const TargetRelevance& relevance) {
  const auto eig = symmetric_eigen(community_laplacian(graph, members));
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < members.size(); ++i) {
    double structural = 0.0;
    for (std::size_t j = 0; j < eig.values.size(); ++j) {
      const double u = eig.vectors(i, j);
      structural += eig.values[j] * u * u;
    }
    const auto& name = graph.nodes[members[i]].name;
    out[name] = std::max(0.0, relevance_of(relevance, name) * structural);
  }
  return out;
}

std::uint64_t kshell_value(std::size_t degree, double node_weight, double incident_weight) {
  const double product = static_cast<double>(degree) * node_weight * incident_weight;
  if (!(product > 0.0)) return 0;
  return static_cast<std::uint64_t>(std::floor(std::sqrt(product)));
}

std::map<std::string, KShellScore> kshell_scores(const FeatureGraph& graph, std::span<const std::size_t> members,
                                                 const TargetRelevance& relevance) {
  if (members.empty()) throw EmptyCommunityError("community has no members");
  const std::size_t k = members.size();
  std::vector<std::size_t> local(graph.node_count(), SIZE_MAX);
  for (std::size_t i = 0; i < k; ++i) local[members[i]] = i;
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(k);
  for (const auto& e : graph.edges) {
    const auto a = local[e.u];
    const auto b = local[e.v];
    if (a == SIZE_MAX || b == SIZE_MAX) continue;
    adj[a].emplace_back(b, e.weight);
    adj[b].emplace_back(a, e.weight);
  }
  std::vector<double> weight(k);
  for (std::size_t i = 0; i < k; ++i) weight[i] = relevance_of(relevance, graph.nodes[members[i]].name);

  std::vector<char> alive(k, 1);
  auto current = [&](std::size_t i) {
    std::size_t degree = 0;
    double incident = 0.0;
    for (const auto& [j, w] : adj[i]) {
      if (!alive[j]) continue;
      ++degree;
      incident += w;
    }
    return kshell_value(degree, weight[i], incident);
  };

  std::vector<KShellScore> score(k);
  std::vector<std::uint64_t> value(k);
  for (std::size_t i = 0; i < k; ++i) value[i] = score[i].k_prime = current(i);

  std::size_t remaining = k;
  std::uint64_t shell = 1;
  while (remaining > 0) {
    for (;;) {
      std::vector<std::size_t> wave;
      for (std::size_t i = 0; i < k; ++i) {
        if (alive[i] && value[i] <= shell) wave.push_back(i);
      }
      if (wave.empty()) break;
      for (auto i : wave) {
        alive[i] = 0;
        score[i].shell_index = shell;
      }
      remaining -= wave.size();
      for (std::size_t i = 0; i < k; ++i) {
        if (alive[i]) value[i] = current(i);
      }
    }
    if (remaining == 0) break;
    // No node is left at this shell; skip straight to the next populated one.
    std::uint64_t lowest = UINT64_MAX;
    for (std::size_t i = 0; i < k; ++i) {
      if (alive[i]) lowest = std::min(lowest, value[i]);
    }
    shell = std::max(shell + 1, lowest);
  }

  std::map<std::string, KShellScore> out;
  for (std::size_t i = 0; i < k; ++i) out[graph.nodes[members[i]].name] = score[i];
  return out;
}

std::vector<CommunityScores> score_partition(const FeatureGraph& graph, const CommunityPartition& partition,
                                             const TargetRelevance& relevance, std::size_t jobs) {
  if (partition.assignment.size() != graph.node_count()) throw SchemaError("partition does not cover the graph");
  const auto groups = partition.members();
  std::vector<CommunityScores> out(groups.size());
  parallel_for(groups.size(), jobs, [&](std::size_t c) {
    out[c].community = c;
    for (auto v : groups[c]) out[c].members.push_back(graph.nodes[v].name);
    out[c].spec = spec_scores(graph, groups[c], relevance);
    out[c].kshell = kshell_scores(graph, groups[c], relevance);
  });
  return out;
}

std::vector<std::string> SelectedFeatureSet::names() const {
  std::vector<std::string> out;
  for (const auto& f : features) out.push_back(f.name);
  return out;
}

namespace {

bool spec_equal(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace

SelectedFeatureSet select_distinctive(const std::string& target, const CommunityPartition& partition,
                                      const std::vector<CommunityScores>& scores,
                                      std::span<const std::string> exclusion_patterns, std::size_t per_community) {
  if (per_community == 0) throw ValidationError("per-community selection count must be positive");
  if (scores.size() != partition.community_count()) {
    throw SchemaError("scores cover " + std::to_string(scores.size()) + " of " +
                      std::to_string(partition.community_count()) + " communities");
  }
  SelectedFeatureSet out;
  out.target = target;
  for (const auto& cs : scores) {
    std::vector<std::string> ranked;
    for (const auto& name : cs.members) {
      if (cs.spec.at(name) > 0.0) ranked.push_back(name);
    }
    std::sort(ranked.begin(), ranked.end(), [&](const std::string& a, const std::string& b) {
      const double sa = cs.spec.at(a), sb = cs.spec.at(b);
      if (!spec_equal(sa, sb)) return sa > sb;
      const auto& ka = cs.kshell.at(a);
      const auto& kb = cs.kshell.at(b);
      if (ka.shell_index != kb.shell_index) return ka.shell_index > kb.shell_index;
      if (ka.k_prime != kb.k_prime) return ka.k_prime > kb.k_prime;
      return a < b;
    });
    for (std::size_t i = 0; i < ranked.size() && i < per_community; ++i) {
      const auto& name = ranked[i];
      std::string rule = "top-k";
      if (i == 0) {
        const bool tied = ranked.size() > 1 && spec_equal(cs.spec.at(name), cs.spec.at(ranked[1]));
        rule = tied ? "kshell-tiebreak" : "max-spec";
      }
      const auto& ks = cs.kshell.at(name);
      out.features.push_back({name, cs.community, cs.spec.at(name), ks.shell_index, ks.k_prime, rule});
    }
  }
  std::erase_if(out.features, [&](const SelectedFeature& f) {
    for (const auto& p : exclusion_patterns) {
      if (matches_pattern(f.name, p)) {
        out.exclusions.push_back({f.name, "matches exclusion pattern '" + p + "'"});
        return true;
      }
    }
    return false;
  });
  return out;
}

std::vector<double> laplacian_spectrum(const FeatureGraph& graph) {
  if (graph.node_count() == 0) throw EmptyGraphError("graph has no nodes");
  std::vector<std::size_t> all(graph.node_count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  auto values = symmetric_eigen(community_laplacian(graph, all)).values;
  for (auto& v : values) v = std::max(0.0, v);  // Laplacians are PSD; clip rounding noise
  return values;
}

double spectral_similarity(const FeatureGraph& a, const FeatureGraph& b) {
  auto sa = laplacian_spectrum(a);
  auto sb = laplacian_spectrum(b);
  if (sa.size() < sb.size()) sa.insert(sa.begin(), sb.size() - sa.size(), 0.0);
  if (sb.size() < sa.size()) sb.insert(sb.begin(), sa.size() - sb.size(), 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) s += (sa[i] - sb[i]) * (sa[i] - sb[i]);
  return std::sqrt(s);
}

}  // namespace pdm
