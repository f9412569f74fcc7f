#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "pdm/error.hpp"
#include "pdm/graph.hpp"
#include "pdm/serialize.hpp"
#include "pdm/stats.hpp"
#include "support.hpp"

using namespace pdm;
using pdm::test::make_graph;

namespace {

AssociationMatrix assoc(std::vector<std::string> names, std::initializer_list<std::initializer_list<double>> rows,
                        AssociationMethod method = AssociationMethod::Pearson) {
  AssociationMatrix m;
  m.method = method;
  m.names = std::move(names);
  for (auto r : rows) m.values.append_row(std::vector<double>(r));
  return m;
}

std::multiset<std::tuple<std::string, std::string, double>> edge_set(const FeatureGraph& g) {
  std::multiset<std::tuple<std::string, std::string, double>> s;
  for (const auto& e : g.edges) s.insert({g.nodes[e.u].name, g.nodes[e.v].name, e.weight});
  return s;
}

FeatureGraph three_node_graph() {
  auto g = make_graph(3, {{0, 1, 0.9}, {1, 2, 0.25}});
  g.nodes[0] = {"a", 2.0};
  g.nodes[1] = {"b", 1.0};
  g.nodes[2] = {"c", 0.5};
  return g;
}

}  // namespace

TEST_CASE("build_feature_graph maps signed correlations to magnitudes") {
  TargetRelevance rel{"alarm", {{"x", 3.0}, {"y", 1.0}}};
  auto g = build_feature_graph(assoc({"x", "y"}, {{1, -0.9}, {-0.9, 1}}), rel);
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0].weight == doctest::Approx(0.9));
  CHECK(g.nodes[0] == GraphNode{"x", 3.0});
  CHECK(g.target == "alarm");
  CHECK(g.kind == FeatureKind::Continuous);
  CHECK(g.warnings.empty());
}

TEST_CASE("build_feature_graph skips zero associations and warns on missing relevance") {
  TargetRelevance rel{"alarm", {{"a", 1.0}, {"b", 1.0}}};
  auto g = build_feature_graph(assoc({"a", "b", "c"}, {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, AssociationMethod::CramersV), rel);
  CHECK(g.node_count() == 3);
  CHECK(g.edges.empty());
  CHECK(g.kind == FeatureKind::Categorical);
  REQUIRE(g.warnings.size() == 1);
  CHECK(g.nodes[2].weight == 0.0);
  CHECK_THROWS_AS(build_feature_graph(AssociationMatrix{}, rel), EmptyGraphError);
}

TEST_CASE("build_feature_graph edges equal pairwise recomputation") {
  Rng rng(17);
  TimeTable t;
  for (int r = 0; r < 300; ++r) t.timestamps.push_back(r);
  std::vector<double> f(300);
  for (auto& v : f) v = rng.normal();
  for (int c = 0; c < 4; ++c) {
    Column col{"f" + std::to_string(c), ValueType::Numeric, {}, {}};
    for (int r = 0; r < 300; ++r) col.values.push_back((c < 2 ? f[r] : -f[r]) + rng.normal());
    t.columns.push_back(col);
  }
  auto names = t.column_names();
  auto m = pearson_matrix(t, names);
  TargetRelevance rel{"alarm", {}};
  for (const auto& n : names) rel.scores[n] = 1.0;
  auto g = build_feature_graph(m, rel);
  std::multiset<std::tuple<std::string, std::string, double>> want;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) {
      const double w = std::abs(pearson(t.columns[i].values, t.columns[j].values));
      if (w != 0.0) want.insert({names[i], names[j], w});
    }
  CHECK(edge_set(g) == want);
}

TEST_CASE("remove_edges uses strict less-than") {
  auto g = make_graph(4, {{0, 1, 0.1}, {1, 2, 0.3}, {2, 3, 0.5}, {0, 3, 1.0}});
  CHECK(remove_edges(g, 0.0).edges == g.edges);
  auto t3 = remove_edges(g, 0.3);
  std::multiset<double> w;
  for (const auto& e : t3.edges) w.insert(e.weight);
  CHECK(w == std::multiset<double>{0.3, 0.5, 1.0});
  auto t1 = remove_edges(g, 1.0);
  REQUIRE(t1.edges.size() == 1);
  CHECK(t1.edges[0].weight == 1.0);
  CHECK(t1.nodes == g.nodes);
}

TEST_CASE("remove_edges is monotone and keeps nodes") {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    auto g = pdm::test::random_graph(8, 0.6, rng);
    const double t1 = rng.uniform(), t2 = t1 + (1 - t1) * rng.uniform();
    auto a = remove_edges(g, t1), b = remove_edges(g, t2);
    auto sa = edge_set(a), sb = edge_set(b);
    CHECK(std::includes(sa.begin(), sa.end(), sb.begin(), sb.end()));
    CHECK(a.nodes == g.nodes);
    CHECK(b.nodes == g.nodes);
  }
}

TEST_CASE("DOT export matches the reviewed golden file") {
  std::ifstream in(std::string(PDM_TEST_DATA_DIR) + "/three_nodes.dot");
  REQUIRE(in);
  std::stringstream golden;
  golden << in.rdbuf();
  CHECK(to_dot(three_node_graph()) == golden.str());
}

TEST_CASE("GraphML export") {
  auto g = make_graph(2, {});
  const auto xml = to_graphml(g);
  CHECK(xml.find("<node id=\"f0\">") != std::string::npos);
  CHECK(xml.find("<edge") == std::string::npos);
  CHECK(xml.find("nodeWeight") != std::string::npos);
  const auto xml3 = to_graphml(three_node_graph());
  CHECK(xml3.find("<edge source=\"a\" target=\"b\"><data key=\"edgeWeight\">0.9</data></edge>") != std::string::npos);
}

TEST_CASE("JSON export round-trips") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    auto g = pdm::test::random_graph(1 + rng.index(9), 0.5, rng);
    g.kind = trial % 2 ? FeatureKind::Categorical : FeatureKind::Continuous;
    CHECK(graph_from_json_text(to_json_text(g)) == g);
  }
  auto dir = pdm::test::scratch_dir("graph-export");
  auto g = three_node_graph();
  export_graph(g, GraphFormat::Json, dir / "g.json");
  CHECK(read_graph_json(dir / "g.json") == g);
  export_graph(g, GraphFormat::Dot, dir / "g.dot");
  CHECK(read_text(dir / "g.dot") == to_dot(g));
  CHECK_THROWS_AS(export_graph(g, GraphFormat::GraphML, dir / "missing" / "x" / "g.graphml"), IoError);
  CHECK_THROWS_AS(read_graph_json(dir / "nope.json"), IoError);
  CHECK_THROWS_AS(graph_from_json_text("{not json"), FormatError);
}
