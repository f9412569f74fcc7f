#include "pdm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "pdm/error.hpp"

namespace pdm {

std::optional<std::size_t> FeatureGraph::find(std::string_view name) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), name,
                             [](const GraphNode& n, std::string_view key) { return n.name < key; });
  if (it == nodes.end() || it->name != name) return std::nullopt;
  return static_cast<std::size_t>(it - nodes.begin());
}

double FeatureGraph::total_edge_weight() const {
  double m = 0.0;
  for (const auto& e : edges) m += e.weight;
  return m;
}

std::vector<double> FeatureGraph::weighted_degrees() const {
  std::vector<double> deg(nodes.size(), 0.0);
  for (const auto& e : edges) {
    deg[e.u] += e.weight;
    deg[e.v] += e.weight;
  }
  return deg;
}

FeatureGraph build_feature_graph(const AssociationMatrix& assoc, const TargetRelevance& relevance) {
  const std::size_t n = assoc.names.size();
  if (n == 0) throw EmptyGraphError("association matrix has no features");
  FeatureGraph g;
  g.target = relevance.target;
  g.kind = assoc.method == AssociationMethod::Pearson ? FeatureKind::Continuous : FeatureKind::Categorical;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return assoc.names[a] < assoc.names[b]; });
  std::vector<std::size_t> position(n);
  for (std::size_t i = 0; i < n; ++i) position[order[i]] = i;

  for (auto src : order) {
    const auto& name = assoc.names[src];
    auto it = relevance.scores.find(name);
    double w = 0.0;
    if (it == relevance.scores.end()) {
      g.warnings.push_back("no relevance score for '" + name + "'; node weight set to 0");
    } else {
      w = it->second;
    }
    g.nodes.push_back({name, w});
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = std::abs(assoc.values(i, j));
      if (w == 0.0) continue;
      auto u = position[i], v = position[j];
      if (u > v) std::swap(u, v);
      g.edges.push_back({u, v, w});
    }
  }
  std::sort(g.edges.begin(), g.edges.end(),
            [](const GraphEdge& a, const GraphEdge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
  return g;
}

FeatureGraph remove_edges(const FeatureGraph& graph, double threshold) {
  FeatureGraph out = graph;
  std::erase_if(out.edges, [threshold](const GraphEdge& e) { return e.weight < threshold; });
  return out;
}

FeatureGraph induced_subgraph(const FeatureGraph& graph, std::vector<std::size_t> members) {
  std::sort(members.begin(), members.end());
  members.erase(std::unique(members.begin(), members.end()), members.end());
  FeatureGraph sub;
  sub.target = graph.target;
  sub.kind = graph.kind;
  std::vector<std::size_t> local(graph.nodes.size(), SIZE_MAX);
  for (std::size_t i = 0; i < members.size(); ++i) {
    local[members[i]] = i;
    sub.nodes.push_back(graph.nodes[members[i]]);
  }
  for (const auto& e : graph.edges) {
    if (local[e.u] == SIZE_MAX || local[e.v] == SIZE_MAX) continue;
    auto u = local[e.u], v = local[e.v];
    if (u > v) std::swap(u, v);
    sub.edges.push_back({u, v, e.weight});
  }
  return sub;
}

std::optional<GraphFormat> parse_graph_format(std::string_view text) {
  if (text == "graphml") return GraphFormat::GraphML;
  if (text == "dot") return GraphFormat::Dot;
  if (text == "json") return GraphFormat::Json;
  return std::nullopt;
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string to_graphml(const FeatureGraph& graph) {
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
     << "  <key id=\"nodeWeight\" for=\"node\" attr.name=\"nodeWeight\" attr.type=\"double\"/>\n"
     << "  <key id=\"edgeWeight\" for=\"edge\" attr.name=\"edgeWeight\" attr.type=\"double\"/>\n"
     << "  <graph id=\"" << xml_escape(graph.target) << "\" edgedefault=\"undirected\">\n";
  for (const auto& n : graph.nodes) {
    os << "    <node id=\"" << xml_escape(n.name) << "\"><data key=\"nodeWeight\">" << csv::format_double(n.weight)
       << "</data></node>\n";
  }
  for (const auto& e : graph.edges) {
    os << "    <edge source=\"" << xml_escape(graph.nodes[e.u].name) << "\" target=\""
       << xml_escape(graph.nodes[e.v].name) << "\"><data key=\"edgeWeight\">" << csv::format_double(e.weight)
       << "</data></edge>\n";
  }
  os << "  </graph>\n</graphml>\n";
  return os.str();
}

std::string to_dot(const FeatureGraph& graph) {
  // Edge weight -> penwidth (0..5); node weight -> width relative to the
  // heaviest node (0.3..1.5 inches).
  double max_weight = 0.0;
  for (const auto& n : graph.nodes) max_weight = std::max(max_weight, n.weight);
  std::ostringstream os;
  os << "graph " << dot_quote(graph.target) << " {\n";
  os << "  node [shape=circle, fixedsize=true];\n";
  for (const auto& n : graph.nodes) {
    const double width = 0.3 + (max_weight > 0.0 ? 1.2 * n.weight / max_weight : 0.0);
    os << "  " << dot_quote(n.name) << " [weight=" << csv::format_double(n.weight) << ", width=" << fixed(width)
       << "];\n";
  }
  for (const auto& e : graph.edges) {
    os << "  " << dot_quote(graph.nodes[e.u].name) << " -- " << dot_quote(graph.nodes[e.v].name)
       << " [weight=" << csv::format_double(e.weight) << ", penwidth=" << fixed(5.0 * e.weight) << "];\n";
  }
  os << "}\n";
  return os.str();
}

std::string to_json_text(const FeatureGraph& graph) {
  nlohmann::ordered_json j;
  j["target"] = graph.target;
  j["kind"] = to_string(graph.kind);
  auto& nodes = j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& n : graph.nodes) nodes.push_back({{"name", n.name}, {"weight", n.weight}});
  auto& edges = j["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : graph.edges) {
    edges.push_back({{"u", graph.nodes[e.u].name}, {"v", graph.nodes[e.v].name}, {"weight", e.weight}});
  }
  return j.dump(2) + "\n";
}

FeatureGraph graph_from_json_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("graph JSON: ") + e.what());
  }
  try {
    FeatureGraph g;
    g.target = j.at("target").get<std::string>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "categorical") {
      g.kind = FeatureKind::Categorical;
    } else if (kind == "continuous") {
      g.kind = FeatureKind::Continuous;
    } else {
      throw FormatError("graph JSON: unknown kind '" + kind + "'");
    }
    for (const auto& n : j.at("nodes")) g.nodes.push_back({n.at("name").get<std::string>(), n.at("weight").get<double>()});
    std::sort(g.nodes.begin(), g.nodes.end(), [](const GraphNode& a, const GraphNode& b) { return a.name < b.name; });
    for (std::size_t i = 1; i < g.nodes.size(); ++i) {
      if (g.nodes[i].name == g.nodes[i - 1].name) throw FormatError("graph JSON: duplicate node '" + g.nodes[i].name + "'");
    }
    for (const auto& e : j.at("edges")) {
      auto u = g.find(e.at("u").get<std::string>());
      auto v = g.find(e.at("v").get<std::string>());
      if (!u || !v) throw FormatError("graph JSON: edge references an unknown node");
      if (*u == *v) throw FormatError("graph JSON: self-loop on '" + g.nodes[*u].name + "'");
      g.edges.push_back({std::min(*u, *v), std::max(*u, *v), e.at("weight").get<double>()});
    }
    std::sort(g.edges.begin(), g.edges.end(),
              [](const GraphEdge& a, const GraphEdge& b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
    for (std::size_t i = 1; i < g.edges.size(); ++i) {
      if (g.edges[i].u == g.edges[i - 1].u && g.edges[i].v == g.edges[i - 1].v) {
        throw FormatError("graph JSON: duplicate edge");
      }
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("graph JSON: ") + e.what());
  }
}

void export_graph(const FeatureGraph& graph, GraphFormat format, const std::filesystem::path& path) {
  std::string text;
  switch (format) {
    case GraphFormat::GraphML: text = to_graphml(graph); break;
    case GraphFormat::Dot: text = to_dot(graph); break;
    case GraphFormat::Json: text = to_json_text(graph); break;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

FeatureGraph read_graph_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return graph_from_json_text(ss.str());
}

}  // namespace pdm
