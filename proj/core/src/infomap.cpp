#include <cmath>
#include <numeric>
#include <queue>

#include "community_graph.hpp"
#include "pdm/error.hpp"

namespace pdm {
namespace {

double plogp(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

// Running terms of the two-level map equation
//   L = plogp(q) - 2 sum plogp(q_i) - sum_a plogp(p_a) + sum plogp(q_i + p_i)
// with q_i the exit rate and p_i the visit rate of module i.
struct Codelength {
  double exit_total = 0.0;    // sum q_i
  double exit_terms = 0.0;    // sum plogp(q_i)
  double module_terms = 0.0;  // sum plogp(q_i + p_i)
  double node_entropy = 0.0;  // sum_a plogp(p_a)

  double value() const { return plogp(exit_total) - 2.0 * exit_terms - node_entropy + module_terms; }
};

struct ModuleState {
  std::vector<double> exit;  // in units of visit rate
  std::vector<double> flow;
};

// Local moving that minimises the codelength. Exit rates are derived from
// edge weights (an undirected walk crosses each edge at rate w / 2m per
// direction); node visit rates come from `node_flow`.
bool infomap_local_moving(const detail::WorkGraph& g, const std::vector<double>& node_flow, Assignment& module,
                          Codelength& code, Rng& rng) {
  const std::size_t n = g.size();
  ModuleState state{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  std::vector<double> out(n);
  for (std::size_t v = 0; v < n; ++v) out[v] = (g.degree[v] - 2.0 * g.self[v]) / g.volume;
  for (std::size_t v = 0; v < n; ++v) {
    state.flow[module[v]] += node_flow[v];
    for (const auto& [u, w] : g.adj[v]) {
      if (module[u] != module[v]) state.exit[module[v]] += w / g.volume;
    }
  }
  code.exit_total = 0.0;
  code.exit_terms = 0.0;
  code.module_terms = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    code.exit_total += state.exit[c];
    code.exit_terms += plogp(state.exit[c]);
    code.module_terms += plogp(state.exit[c] + state.flow[c]);
  }

  const auto order = detail::shuffled_order(n, rng);
  std::vector<double> weight_to(n, 0.0);
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> touched;
  bool any = false;
  for (int pass = 0; pass < 1000; ++pass) {
    std::size_t moved = 0;
    for (auto v : order) {
      const auto from = module[v];
      for (const auto& [u, w] : g.adj[v]) {
        const auto c = module[u];
        if (!seen[c]) {
          seen[c] = 1;
          touched.push_back(c);
        }
        weight_to[c] += w / g.volume;
      }
      const double to_from = seen[from] ? weight_to[from] : 0.0;
      const double exit_from_new = state.exit[from] - out[v] + 2.0 * to_from;
      const double flow_from_new = state.flow[from] - node_flow[v];

      std::size_t best = from;
      double best_delta = 0.0;
      double best_exit_to = 0.0;
      for (auto c : touched) {
        if (c == from) continue;
        const double exit_to_new = state.exit[c] + out[v] - 2.0 * weight_to[c];
        const double flow_to_new = state.flow[c] + node_flow[v];
        const double total = code.exit_total - state.exit[from] - state.exit[c] + exit_from_new + exit_to_new;
        const double exit_terms = code.exit_terms - plogp(state.exit[from]) - plogp(state.exit[c]) +
                                  plogp(exit_from_new) + plogp(exit_to_new);
        const double module_terms = code.module_terms - plogp(state.exit[from] + state.flow[from]) -
                                    plogp(state.exit[c] + state.flow[c]) +
                                    plogp(exit_from_new + flow_from_new) + plogp(exit_to_new + flow_to_new);
        const double delta = (plogp(total) - 2.0 * exit_terms + module_terms) -
                             (plogp(code.exit_total) - 2.0 * code.exit_terms + code.module_terms);
        if (delta < best_delta - 1e-13) {
          best_delta = delta;
          best = c;
          best_exit_to = exit_to_new;
        }
      }
      if (best != from) {
        const double flow_to_new = state.flow[best] + node_flow[v];
        code.exit_total += exit_from_new + best_exit_to - state.exit[from] - state.exit[best];
        code.exit_terms += plogp(exit_from_new) + plogp(best_exit_to) - plogp(state.exit[from]) -
                           plogp(state.exit[best]);
        code.module_terms += plogp(exit_from_new + flow_from_new) + plogp(best_exit_to + flow_to_new) -
                             plogp(state.exit[from] + state.flow[from]) -
                             plogp(state.exit[best] + state.flow[best]);
        state.exit[from] = exit_from_new;
        state.flow[from] = flow_from_new;
        state.exit[best] = best_exit_to;
        state.flow[best] = flow_to_new;
        module[v] = best;
        ++moved;
      }
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

}  // namespace

std::vector<double> stationary_distribution(const FeatureGraph& graph, double tolerance) {
  const std::size_t n = graph.node_count();
  const auto degree = graph.weighted_degrees();
  const double volume = std::accumulate(degree.begin(), degree.end(), 0.0);
  std::vector<double> p(n, 0.0);
  if (volume <= 0.0) return p;
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (const auto& e : graph.edges) {
    adj[e.u].emplace_back(e.v, e.weight);
    adj[e.v].emplace_back(e.u, e.weight);
  }
  // Uniform start inside each component, component mass = its volume share.
  std::vector<std::size_t> component(n, SIZE_MAX);
  for (std::size_t s = 0; s < n; ++s) {
    if (component[s] != SIZE_MAX || degree[s] <= 0.0) continue;
    std::vector<std::size_t> members{s};
    component[s] = s;
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (const auto& [u, w] : adj[members[i]]) {
        if (component[u] == SIZE_MAX) {
          component[u] = s;
          members.push_back(u);
        }
      }
    }
    double mass = 0.0;
    for (auto v : members) mass += degree[v];
    for (auto v : members) p[v] = mass / volume / static_cast<double>(members.size());
  }
  std::vector<double> next(n);
  for (int iter = 0; iter < 1'000'000; ++iter) {
    for (std::size_t v = 0; v < n; ++v) {
      double incoming = 0.0;
      for (const auto& [u, w] : adj[v]) incoming += p[u] * w / degree[u];
      next[v] = 0.5 * p[v] + 0.5 * incoming;
    }
    double change = 0.0;
    for (std::size_t v = 0; v < n; ++v) change += std::abs(next[v] - p[v]);
    p.swap(next);
    if (change < tolerance) break;
  }
  return p;
}

double map_equation(const FeatureGraph& graph, std::span<const std::size_t> assignment) {
  if (assignment.size() != graph.node_count()) throw SchemaError("assignment does not cover the graph");
  const auto p = stationary_distribution(graph);
  const double volume = 2.0 * graph.total_edge_weight();
  const Assignment a = normalize_assignment(assignment);
  const std::size_t c = a.empty() ? 0 : *std::max_element(a.begin(), a.end()) + 1;
  std::vector<double> exit(c, 0.0), flow(c, 0.0);
  double node_entropy = 0.0;
  for (std::size_t v = 0; v < a.size(); ++v) {
    flow[a[v]] += p[v];
    node_entropy += plogp(p[v]);
  }
  if (volume > 0.0) {
    for (const auto& e : graph.edges) {
      if (a[e.u] != a[e.v]) {
        exit[a[e.u]] += e.weight / volume;
        exit[a[e.v]] += e.weight / volume;
      }
    }
  }
  double q = 0.0, exit_terms = 0.0, module_terms = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    q += exit[k];
    exit_terms += plogp(exit[k]);
    module_terms += plogp(exit[k] + flow[k]);
  }
  return plogp(q) - 2.0 * exit_terms - node_entropy + module_terms;
}

CommunityPartition infomap(const FeatureGraph& graph, std::uint64_t seed) {
  const std::size_t n = graph.node_count();
  Assignment membership(n);
  std::iota(membership.begin(), membership.end(), std::size_t{0});
  if (graph.edges.empty()) return detail::finish(graph, membership, Algorithm::InfoMap);

  Rng rng(seed);
  auto level = detail::WorkGraph::from(graph);
  std::vector<double> flow = stationary_distribution(graph);
  Codelength code;
  for (double f : flow) code.node_entropy += plogp(f);
  for (int depth = 0; depth < 64; ++depth) {
    Assignment module(level.size());
    std::iota(module.begin(), module.end(), std::size_t{0});
    if (!infomap_local_moving(level, flow, module, code, rng)) break;
    const std::size_t count = detail::renumber(module);
    for (auto& m : membership) m = module[m];
    if (count == level.size()) break;
    std::vector<double> next_flow(count, 0.0);
    for (std::size_t v = 0; v < level.size(); ++v) next_flow[module[v]] += flow[v];
    level = level.aggregate(module, count);
    flow = std::move(next_flow);
  }
  return detail::finish(graph, std::move(membership), Algorithm::InfoMap);
}

}  // namespace pdm
