#include "pdm/community.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "community_graph.hpp"
#include "pdm/error.hpp"

namespace pdm {

const char* to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::Leiden: return "Leiden";
    case Algorithm::InfoMap: return "InfoMap";
    case Algorithm::FastGreedy: return "FastGreedy";
    case Algorithm::Louvain: return "Louvain";
  }
  return "Louvain";
}

std::optional<Algorithm> parse_algorithm(std::string_view text) {
  // Case-insensitive; '_' and '-' are ignored ("fast_greedy" == "FastGreedy").
  auto fold = [](std::string_view s) {
    std::string out;
    for (char c : s) {
      if (c != '_' && c != '-') out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
  };
  const auto key = fold(text);
  for (auto a : kDefaultAlgorithms) {
    if (key == fold(to_string(a))) return a;
  }
  return std::nullopt;
}

std::size_t CommunityPartition::community_count() const {
  if (assignment.empty()) return 0;
  return *std::max_element(assignment.begin(), assignment.end()) + 1;
}

std::vector<std::vector<std::size_t>> CommunityPartition::members() const {
  std::vector<std::vector<std::size_t>> out(community_count());
  for (std::size_t v = 0; v < assignment.size(); ++v) out[assignment[v]].push_back(v);
  return out;
}

Assignment normalize_assignment(std::span<const std::size_t> assignment) {
  Assignment out(assignment.begin(), assignment.end());
  detail::renumber(out);
  return out;
}

double modularity(const FeatureGraph& graph, std::span<const std::size_t> assignment) {
  if (assignment.size() != graph.node_count()) {
    throw SchemaError("assignment covers " + std::to_string(assignment.size()) + " of " +
                      std::to_string(graph.node_count()) + " nodes");
  }
  const double m = graph.total_edge_weight();
  if (!(m > 0.0)) throw UndefinedModularityError("graph has no edge weight");
  const Assignment a = normalize_assignment(assignment);
  const std::size_t c = a.empty() ? 0 : *std::max_element(a.begin(), a.end()) + 1;
  std::vector<double> inside(c, 0.0), degree(c, 0.0);
  for (const auto& e : graph.edges) {
    degree[a[e.u]] += e.weight;
    degree[a[e.v]] += e.weight;
    if (a[e.u] == a[e.v]) inside[a[e.u]] += e.weight;
  }
  double q = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    const double frac = degree[k] / (2.0 * m);
    q += inside[k] / m - frac * frac;
  }
  return q;
}

Assignment split_disconnected(const FeatureGraph& graph, std::span<const std::size_t> assignment) {
  const std::size_t n = graph.node_count();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : graph.edges) {
    if (assignment[e.u] == assignment[e.v]) {
      adj[e.u].push_back(e.v);
      adj[e.v].push_back(e.u);
    }
  }
  Assignment out(n, SIZE_MAX);
  std::size_t next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (out[s] != SIZE_MAX) continue;
    std::queue<std::size_t> q;
    q.push(s);
    out[s] = next;
    while (!q.empty()) {
      const auto v = q.front();
      q.pop();
      for (auto u : adj[v]) {
        if (out[u] == SIZE_MAX) {
          out[u] = next;
          q.push(u);
        }
      }
    }
    ++next;
  }
  return out;
}

CommunityPartition run_algorithm(Algorithm algorithm, const FeatureGraph& graph, std::uint64_t seed) {
  switch (algorithm) {
    case Algorithm::Leiden: return leiden(graph, seed);
    case Algorithm::InfoMap: return infomap(graph, seed);
    case Algorithm::FastGreedy: return fast_greedy(graph);
    case Algorithm::Louvain: return louvain(graph, seed);
  }
  throw ValidationError("unknown community detection algorithm");
}

namespace detail {

WorkGraph WorkGraph::from(const FeatureGraph& graph) {
  WorkGraph g;
  const std::size_t n = graph.node_count();
  g.adj.resize(n);
  g.self.assign(n, 0.0);
  g.degree.assign(n, 0.0);
  for (const auto& e : graph.edges) {
    g.adj[e.u].emplace_back(e.v, e.weight);
    g.adj[e.v].emplace_back(e.u, e.weight);
    g.degree[e.u] += e.weight;
    g.degree[e.v] += e.weight;
  }
  g.volume = std::accumulate(g.degree.begin(), g.degree.end(), 0.0);
  return g;
}

WorkGraph WorkGraph::aggregate(const Assignment& community, std::size_t count) const {
  WorkGraph out;
  out.adj.resize(count);
  out.self.assign(count, 0.0);
  out.degree.assign(count, 0.0);
  std::vector<double> weight_to(count, 0.0);
  std::vector<std::size_t> touched;
  std::vector<std::vector<std::size_t>> members(count);
  for (std::size_t v = 0; v < size(); ++v) members[community[v]].push_back(v);
  for (std::size_t c = 0; c < count; ++c) {
    for (auto v : members[c]) {
      out.self[c] += self[v];
      out.degree[c] += degree[v];
      for (const auto& [u, w] : adj[v]) {
        const auto d = community[u];
        if (d == c) {
          if (u > v) out.self[c] += w;
          continue;
        }
        if (weight_to[d] == 0.0) touched.push_back(d);
        weight_to[d] += w;
      }
    }
    std::sort(touched.begin(), touched.end());
    for (auto d : touched) {
      out.adj[c].emplace_back(d, weight_to[d]);
      weight_to[d] = 0.0;
    }
    touched.clear();
  }
  out.volume = volume;
  return out;
}

std::size_t renumber(Assignment& a) {
  std::vector<std::size_t> map;
  std::size_t next = 0;
  for (auto& c : a) {
    if (c >= map.size()) map.resize(c + 1, SIZE_MAX);
    if (map[c] == SIZE_MAX) map[c] = next++;
    c = map[c];
  }
  return next;
}

std::vector<std::size_t> shuffled_order(std::size_t n, Rng& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  return order;
}

bool modularity_local_moving(const WorkGraph& g, Assignment& community, Rng& rng, bool allow_empty) {
  const std::size_t n = g.size();
  if (g.volume <= 0.0) return false;
  std::vector<double> total(n, 0.0);
  std::vector<std::size_t> size(n, 0);
  for (std::size_t v = 0; v < n; ++v) {
    total[community[v]] += g.degree[v];
    ++size[community[v]];
  }
  std::vector<std::size_t> empty;
  for (std::size_t c = n; c-- > 0;) {
    if (size[c] == 0) empty.push_back(c);
  }
  const auto order = shuffled_order(n, rng);
  std::vector<double> weight_to(n, 0.0);
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> touched;
  bool any = false;
  constexpr double kEps = 1e-13;
  for (int pass = 0; pass < 1000; ++pass) {
    std::size_t moved = 0;
    for (auto v : order) {
      const auto from = community[v];
      const double k = g.degree[v];
      for (const auto& [u, w] : g.adj[v]) {
        const auto c = community[u];
        if (!seen[c]) {
          seen[c] = 1;
          touched.push_back(c);
        }
        weight_to[c] += w;
      }
      total[from] -= k;
      --size[from];
      std::size_t best = from;
      double best_gain = weight_to[from] - total[from] * k / g.volume;
      for (auto c : touched) {
        if (c == from) continue;
        const double gain = weight_to[c] - total[c] * k / g.volume;
        if (gain > best_gain + kEps) {
          best_gain = gain;
          best = c;
        }
      }
      if (allow_empty && best == from && best_gain < -kEps && size[from] > 0 && !empty.empty()) {
        best = empty.back();
      }
      if (best != from) {
        if (size[from] == 0) empty.push_back(from);
        if (size[best] == 0) std::erase(empty, best);
        ++moved;
      }
      community[v] = best;
      total[best] += k;
      ++size[best];
      for (auto c : touched) {
        weight_to[c] = 0.0;
        seen[c] = 0;
      }
      touched.clear();
    }
    if (moved == 0) break;
    any = true;
  }
  return any;
}

CommunityPartition finish(const FeatureGraph& graph, Assignment assignment, Algorithm algorithm) {
  CommunityPartition p;
  renumber(assignment);
  p.assignment = std::move(assignment);
  p.algorithm = algorithm;
  if (graph.total_edge_weight() > 0.0) {
    p.modularity = modularity(graph, p.assignment);
  } else {
    p.modularity = 0.0;
    p.modularity_defined = false;
  }
  return p;
}

}  // namespace detail
}  // namespace pdm
