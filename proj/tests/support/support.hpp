// Helpers shared by the unit and acceptance suites: small graph builders,
// brute-force oracles and scratch directories.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pdm/community.hpp"
#include "pdm/graph.hpp"
#include "pdm/ingest.hpp"
#include "pdm/rng.hpp"
#include "pdm/stats.hpp"

namespace pdm::test {

struct WeightedEdge {
  std::size_t u;
  std::size_t v;
  double w;
};

inline FeatureGraph make_graph(std::size_t n, const std::vector<WeightedEdge>& edges) {
  FeatureGraph g;
  g.target = "alarm";
  for (std::size_t i = 0; i < n; ++i) g.nodes.push_back({"f" + std::to_string(i), 1.0});
  for (const auto& e : edges) g.edges.push_back({std::min(e.u, e.v), std::max(e.u, e.v), e.w});
  return g;
}

inline FeatureGraph with_weights(FeatureGraph g, const std::vector<double>& node_weights) {
  for (std::size_t i = 0; i < g.nodes.size(); ++i) g.nodes[i].weight = node_weights[i];
  return g;
}

/// Erdos-Renyi style graph with uniform (0.05, 1] edge weights.
inline FeatureGraph random_graph(std::size_t n, double density, Rng& rng) {
  std::vector<WeightedEdge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (rng.uniform() < density) edges.push_back({i, j, 0.05 + 0.95 * rng.uniform()});
    }
  }
  auto g = make_graph(n, edges);
  for (auto& node : g.nodes) node.weight = 0.1 + 10.0 * rng.uniform();
  return g;
}

/// Two k-cliques with intra weight w_in joined by a single bridge of weight w_bridge.
inline FeatureGraph two_cliques(std::size_t k, double w_in, double w_bridge) {
  std::vector<WeightedEdge> edges;
  for (std::size_t block = 0; block < 2; ++block) {
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) edges.push_back({block * k + i, block * k + j, w_in});
    }
  }
  edges.push_back({k - 1, k, w_bridge});
  return make_graph(2 * k, edges);
}

/// Visits every set partition of n labelled items as a restricted growth string.
inline void for_each_partition(std::size_t n, const std::function<void(const std::vector<std::size_t>&)>& visit) {
  std::vector<std::size_t> a(n, 0);
  std::function<void(std::size_t, std::size_t)> extend = [&](std::size_t i, std::size_t used) {
    if (i == n) {
      visit(a);
      return;
    }
    for (std::size_t v = 0; v <= used; ++v) {
      a[i] = v;
      extend(i + 1, std::max(used, v + 1));
    }
  };
  if (n == 0) {
    visit(a);
    return;
  }
  extend(1, 1);
}

/// Modularity written from the definition over node pairs, independent of the library's
/// community-aggregate formula.
inline double pairwise_modularity(const FeatureGraph& g, const std::vector<std::size_t>& c) {
  const std::size_t n = g.node_count();
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  double m = 0.0;
  for (const auto& e : g.edges) {
    a[e.u][e.v] += e.weight;
    a[e.v][e.u] += e.weight;
    m += e.weight;
  }
  std::vector<double> k(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) k[i] += a[i][j];
  double q = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (c[i] == c[j]) q += a[i][j] - k[i] * k[j] / (2.0 * m);
  return q / (2.0 * m);
}

inline double best_modularity(const FeatureGraph& g) {
  double best = -1.0;
  for_each_partition(g.node_count(), [&](const std::vector<std::size_t>& p) {
    best = std::max(best, pairwise_modularity(g, p));
  });
  return best;
}

/// Adjusted Rand index between two labelings of the same items.
inline double adjusted_rand(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::map<std::pair<std::size_t, std::size_t>, double> joint;
  std::map<std::size_t, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1;
    ra[a[i]] += 1;
    rb[b[i]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double sum_joint = 0, sum_a = 0, sum_b = 0;
  for (const auto& [k, v] : joint) sum_joint += c2(v);
  for (const auto& [k, v] : ra) sum_a += c2(v);
  for (const auto& [k, v] : rb) sum_b += c2(v);
  const double total = c2(static_cast<double>(a.size()));
  const double expected = sum_a * sum_b / total;
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (sum_joint - expected) / (max_index - expected);
}

inline TimeTable parse_csv(const std::string& text, const std::string& ts = "timestamp") {
  std::istringstream in(text);
  return parse_table(in, ts);
}

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("pdmgraph-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace pdm::test
