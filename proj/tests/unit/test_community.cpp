#include <doctest.h>

#include <cmath>
#include <queue>
#include <set>

#include "pdm/community.hpp"
#include "pdm/error.hpp"
#include "support.hpp"

using namespace pdm;
using namespace pdm::test;

namespace {

bool same_partition(const Assignment& a, const Assignment& b) {
  return normalize_assignment(a) == normalize_assignment(b);
}

bool connected_within(const FeatureGraph& g, const std::vector<std::size_t>& members) {
  if (members.empty()) return true;
  std::set<std::size_t> in(members.begin(), members.end()), seen{members[0]};
  std::queue<std::size_t> q;
  q.push(members[0]);
  while (!q.empty()) {
    auto v = q.front();
    q.pop();
    for (const auto& e : g.edges) {
      if (e.weight <= 0) continue;
      std::size_t w = e.u == v ? e.v : e.v == v ? e.u : SIZE_MAX;
      if (w != SIZE_MAX && in.count(w) && !seen.count(w)) {
        seen.insert(w);
        q.push(w);
      }
    }
  }
  return seen.size() == in.size();
}

bool is_connected(const FeatureGraph& g) {
  std::vector<std::size_t> all(g.node_count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return connected_within(g, all);
}

// Two-level map equation for a connected undirected graph, written from the
// definition: node visit rates are degree / 2m, module exit rates are the
// boundary weight / 2m.
double map_equation_oracle(const FeatureGraph& g, const Assignment& a) {
  auto h = [](const std::vector<double>& p) {
    double total = 0, s = 0;
    for (double x : p) total += x;
    for (double x : p)
      if (x > 0) s -= (x / total) * std::log2(x / total);
    return s;
  };
  const double two_m = 2 * g.total_edge_weight();
  const auto deg = g.weighted_degrees();
  const std::size_t c = *std::max_element(a.begin(), a.end()) + 1;
  std::vector<double> exit(c, 0);
  for (const auto& e : g.edges) {
    if (a[e.u] != a[e.v]) {
      exit[a[e.u]] += e.weight / two_m;
      exit[a[e.v]] += e.weight / two_m;
    }
  }
  double q = 0;
  for (double x : exit) q += x;
  double l = q > 0 ? q * h(exit) : 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    std::vector<double> within{exit[k]};
    double pk = exit[k];
    for (std::size_t v = 0; v < a.size(); ++v) {
      if (a[v] == k) {
        within.push_back(deg[v] / two_m);
        pk += deg[v] / two_m;
      }
    }
    l += pk * h(within);
  }
  return l;
}

}  // namespace

TEST_CASE("partition enumeration yields Bell numbers") {
  const std::size_t bell[] = {1, 1, 2, 5, 15, 52, 203, 877, 4140};
  for (std::size_t n = 1; n <= 8; ++n) {
    std::size_t count = 0;
    for_each_partition(n, [&](const std::vector<std::size_t>&) { ++count; });
    CHECK(count == bell[n]);
  }
}

TEST_CASE("modularity examples") {
  auto triangles = make_graph(6, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}, {3, 4, 1}, {4, 5, 1}, {3, 5, 1}});
  CHECK(modularity(triangles, Assignment{0, 0, 0, 0, 0, 0}) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(modularity(triangles, Assignment{0, 0, 0, 1, 1, 1}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(modularity(triangles, Assignment{0, 1, 2, 3, 4, 5}) < 0.0);
  CHECK_THROWS_AS(modularity(make_graph(3, {}), Assignment{0, 1, 2}), UndefinedModularityError);
}

TEST_CASE("modularity equals the pairwise definition on random graphs") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    auto g = random_graph(2 + rng.index(9), 0.5, rng);
    if (g.edges.empty()) continue;
    Assignment a(g.node_count());
    for (auto& x : a) x = rng.index(3);
    CHECK(std::abs(modularity(g, a) - pairwise_modularity(g, a)) <= 1e-12);
  }
}

TEST_CASE("every algorithm separates two disconnected cliques") {
  std::vector<WeightedEdge> edges;
  for (std::size_t b = 0; b < 2; ++b)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = i + 1; j < 4; ++j) edges.push_back({b * 4 + i, b * 4 + j, 1.0});
  auto g = make_graph(8, edges);
  const Assignment want{0, 0, 0, 0, 1, 1, 1, 1};
  for (auto alg : kDefaultAlgorithms) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto p = run_algorithm(alg, g, seed);
      CHECK_MESSAGE(same_partition(p.assignment, want), to_string(alg));
      CHECK(p.algorithm == alg);
    }
  }
}

TEST_CASE("small graph cases") {
  auto triangle = make_graph(3, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}});
  CHECK(louvain(triangle, 1).community_count() == 1);
  CHECK(leiden(triangle, 1).community_count() == 1);
  auto edge = make_graph(2, {{0, 1, 0.7}});
  auto fg = fast_greedy(edge);
  CHECK(fg.community_count() == 1);
  auto triangles = make_graph(6, {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}, {3, 4, 1}, {4, 5, 1}, {3, 5, 1}});
  auto ft = fast_greedy(triangles);
  CHECK(ft.community_count() == 2);
  CHECK(ft.modularity == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("edgeless graphs return singletons with undefined modularity") {
  auto g = make_graph(3, {});
  for (auto alg : kDefaultAlgorithms) {
    auto p = run_algorithm(alg, g, 3);
    CHECK(p.community_count() == 3);
    CHECK_FALSE(p.modularity_defined);
  }
}

TEST_CASE("algorithms never beat the enumeration optimum and report exact modularity") {
  Rng rng(2024);
  std::size_t louvain_hits = 0, leiden_hits = 0, total = 0;
  for (int trial = 0; trial < 25; ++trial) {
    auto g = random_graph(4 + rng.index(5), 0.55, rng);
    if (g.edges.empty()) continue;
    ++total;
    const double best = best_modularity(g);
    for (auto alg : kDefaultAlgorithms) {
      auto p = run_algorithm(alg, g, static_cast<std::uint64_t>(trial));
      const double q = pairwise_modularity(g, p.assignment);
      CHECK(std::abs(p.modularity - q) <= 1e-12);
      CHECK(q <= best + 1e-12);
      if (alg == Algorithm::FastGreedy) CHECK(q >= best - 0.05);
      if (alg == Algorithm::Louvain && q >= best - 1e-12) ++louvain_hits;
      if (alg == Algorithm::Leiden && q >= best - 1e-12) ++leiden_hits;
    }
  }
  CHECK(louvain_hits * 10 >= total * 8);
  CHECK(leiden_hits * 10 >= total * 8);
}

TEST_CASE("two-clique-plus-bridge: Louvain finds the enumeration optimum") {
  auto g = two_cliques(4, 1.0, 1.0);
  const double best = best_modularity(g);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CHECK(louvain(g, seed).modularity == doctest::Approx(best).epsilon(1e-12));
    CHECK(fast_greedy(g).modularity >= best - 0.05);
  }
}

TEST_CASE("Leiden is at least as good as Louvain on the oracle graph over 20 seeds") {
  auto g = two_cliques(4, 1.0, 1.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    CHECK(leiden(g, seed).modularity >= louvain(g, seed).modularity - 1e-12);
  }
}

TEST_CASE("Leiden communities induce connected subgraphs") {
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    auto g = random_graph(5 + rng.index(20), 0.15 + 0.3 * rng.uniform(), rng);
    auto p = leiden(g, static_cast<std::uint64_t>(trial));
    for (const auto& members : p.members()) CHECK(connected_within(g, members));
  }
}

TEST_CASE("split_disconnected separates disconnected parts of a community") {
  auto g = make_graph(4, {{0, 1, 1}, {2, 3, 1}});
  auto split = split_disconnected(g, Assignment{0, 0, 0, 0});
  CHECK(same_partition(split, Assignment{0, 0, 1, 1}));
}

TEST_CASE("map equation") {
  std::vector<WeightedEdge> k4;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) k4.push_back({i, j, 1.0});
  auto g = make_graph(4, k4);
  // One module: L = H(1/4 x 4) = 2 bits. Two pairs: exit 1/3 each, so
  // L = 2/3 * 1 + 2 * (5/6) * H(0.4, 0.3, 0.3) ~ 3.285 bits.
  const double one = map_equation(g, Assignment{0, 0, 0, 0});
  const double two = map_equation(g, Assignment{0, 0, 1, 1});
  CHECK(one == doctest::Approx(2.0).epsilon(1e-9));
  const double h = -(0.4 * std::log2(0.4) + 0.6 * std::log2(0.3));
  CHECK(two == doctest::Approx(2.0 / 3.0 + 5.0 / 3.0 * h).epsilon(1e-9));
  CHECK(two > one);
  auto p = infomap(g, 5);
  CHECK(p.community_count() == 1);

  Rng rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    auto r = random_graph(3 + rng.index(8), 0.6, rng);
    if (r.edges.empty() || !is_connected(r)) continue;
    Assignment a(r.node_count());
    for (auto& x : a) x = rng.index(3);
    a = normalize_assignment(a);
    CHECK(map_equation(r, a) == doctest::Approx(map_equation_oracle(r, a)).epsilon(1e-9));
    Assignment singletons(r.node_count());
    for (std::size_t i = 0; i < singletons.size(); ++i) singletons[i] = i;
    auto im = infomap(r, static_cast<std::uint64_t>(trial));
    CHECK(map_equation(r, im.assignment) <= map_equation(r, singletons) + 1e-12);
  }
}

TEST_CASE("stationary distribution of a connected graph is proportional to degree") {
  auto g = make_graph(4, {{0, 1, 1}, {1, 2, 2}, {2, 3, 0.5}, {0, 2, 1}});
  auto p = stationary_distribution(g);
  auto d = g.weighted_degrees();
  const double two_m = 2 * g.total_edge_weight();
  for (std::size_t i = 0; i < 4; ++i) CHECK(p[i] == doctest::Approx(d[i] / two_m).epsilon(1e-9));
}

TEST_CASE("algorithms are deterministic given a seed") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    auto g = random_graph(15, 0.3, rng);
    for (auto alg : kDefaultAlgorithms) {
      CHECK(run_algorithm(alg, g, 42).assignment == run_algorithm(alg, g, 42).assignment);
    }
  }
}

TEST_CASE("detect_dynamic on two cliques with a weak bridge") {
  auto g = two_cliques(4, 0.9, 0.15);
  const auto ladder = default_threshold_ladder();
  CHECK(ladder.size() == 18);
  CHECK(ladder.front() == doctest::Approx(0.10));
  CHECK(ladder.back() == doctest::Approx(0.95));
  auto r = detect_dynamic(g, ladder, kDefaultAlgorithms, 7);
  CHECK(r.best.threshold >= 0.2);
  CHECK(r.best.threshold <= 0.9);
  CHECK(same_partition(r.best.assignment, Assignment{0, 0, 0, 0, 1, 1, 1, 1}));
  CHECK(r.table.size() == ladder.size() * 4);
  for (const auto& row : r.table) {
    if (row.modularity) CHECK(*row.modularity <= r.best.modularity + 1e-15);
  }
  // Brute force over the ladder: the winner's modularity is the best any
  // partition achieves on any thresholded graph.
  double brute = -1;
  for (double t : ladder) {
    auto gt = remove_edges(g, t);
    if (!gt.edges.empty()) brute = std::max(brute, best_modularity(gt));
  }
  CHECK(r.best.modularity == doctest::Approx(brute).epsilon(1e-12));
  // Lower threshold wins ties.
  CHECK(r.best.threshold == doctest::Approx(0.2));
  CHECK(r.best.algorithm == Algorithm::Leiden);
}

TEST_CASE("detect_dynamic degenerate cases") {
  Rng rng(4);
  auto g = random_graph(10, 0.4, rng);
  const std::vector<double> one{0.3};
  for (auto alg : kDefaultAlgorithms) {
    const std::vector<Algorithm> algs{alg};
    auto r = detect_dynamic(g, one, algs, 9);
    auto direct = run_algorithm(alg, remove_edges(g, 0.3), sweep_cell_seed(9, 0.3, alg));
    CHECK(r.best.assignment == direct.assignment);
    CHECK(r.best.modularity == direct.modularity);
  }
  auto weak = make_graph(3, {{0, 1, 0.05}});
  const std::vector<double> high{0.5, 0.6};
  CHECK_THROWS_AS(detect_dynamic(weak, high, kDefaultAlgorithms, 1), NoStructureError);
  // Parallelism does not change the sweep.
  auto a = detect_dynamic(g, default_threshold_ladder(), kDefaultAlgorithms, 5, 1);
  auto b = detect_dynamic(g, default_threshold_ladder(), kDefaultAlgorithms, 5, 4);
  CHECK(a.best.assignment == b.best.assignment);
  CHECK(a.best.modularity == b.best.modularity);
}

TEST_CASE("parse_algorithm accepts common spellings") {
  CHECK(parse_algorithm("leiden") == Algorithm::Leiden);
  CHECK(parse_algorithm("InfoMap") == Algorithm::InfoMap);
  CHECK(parse_algorithm("fast_greedy") == Algorithm::FastGreedy);
  CHECK(parse_algorithm("fast-greedy") == Algorithm::FastGreedy);
  CHECK(parse_algorithm("LOUVAIN") == Algorithm::Louvain);
  CHECK_FALSE(parse_algorithm("walktrap"));
}
