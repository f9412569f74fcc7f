#include "pdm/serialize.hpp"

#include <fstream>
#include <sstream>

#include "csv.hpp"
#include "pdm/error.hpp"

namespace pdm {

namespace {

constexpr int kForestFormatVersion = 1;

Json number_or_null(std::optional<double> v) { return v ? Json(*v) : Json(nullptr); }

template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

FeatureKind parse_kind(const std::string& s) {
  if (s == "categorical") return FeatureKind::Categorical;
  if (s == "continuous") return FeatureKind::Continuous;
  throw FormatError("unknown feature kind '" + s + "'");
}

}  // namespace

Json to_json(const AssociationMatrix& m) {
  Json j;
  j["method"] = to_string(m.method);
  j["names"] = m.names;
  auto& rows = j["rows"] = Json::array();
  for (std::size_t r = 0; r < m.values.rows(); ++r) {
    auto row = m.values.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return j;
}

AssociationMatrix association_from_json(const Json& j) {
  return guarded("association matrix", [&] {
    AssociationMatrix m;
    const auto method = j.at("method").get<std::string>();
    if (method == to_string(AssociationMethod::Pearson)) {
      m.method = AssociationMethod::Pearson;
    } else if (method == to_string(AssociationMethod::CramersV)) {
      m.method = AssociationMethod::CramersV;
    } else {
      throw FormatError("unknown association method '" + method + "'");
    }
    m.names = j.at("names").get<std::vector<std::string>>();
    const auto& rows = j.at("rows");
    const std::size_t n = m.names.size();
    if (rows.size() != n) throw FormatError("association matrix: row count does not match names");
    m.values = Matrix(n, n);
    for (std::size_t r = 0; r < n; ++r) {
      if (rows[r].size() != n) throw FormatError("association matrix: ragged row");
      for (std::size_t c = 0; c < n; ++c) m.values(r, c) = rows[r][c].get<double>();
    }
    return m;
  });
}

Json to_json(const IntervalSet& intervals) {
  Json j = Json::array();
  for (const auto& i : intervals) j.push_back({{"start", i.start}, {"end", i.end}, {"label", i.label}});
  return j;
}

Json to_json(const TargetRelevance& rel) {
  Json j;
  j["target"] = rel.target;
  auto& scores = j["scores"] = Json::object();
  for (const auto& [name, f] : rel.scores) scores[name] = f;
  return j;
}

TargetRelevance relevance_from_json(const Json& j) {
  return guarded("relevance", [&] {
    TargetRelevance r;
    r.target = j.at("target").get<std::string>();
    for (const auto& [name, f] : j.at("scores").items()) r.scores[name] = f.get<double>();
    return r;
  });
}

Json to_json(const Schema& schema) {
  Json j = Json::object();
  for (const auto& [name, spec] : schema) {
    Json s;
    s["kind"] = to_string(spec.kind);
    if (spec.kind == FeatureKind::Categorical) s["cardinality"] = spec.cardinality;
    j[name] = s;
  }
  return j;
}

Schema schema_from_json(const Json& j) {
  return guarded("schema", [&] {
    Schema schema;
    for (const auto& [name, s] : j.items()) {
      FeatureSpec spec;
      spec.kind = parse_kind(s.at("kind").get<std::string>());
      spec.cardinality = s.value("cardinality", std::size_t{0});
      schema[name] = spec;
    }
    return schema;
  });
}

Json to_json(const std::vector<Removal>& removals) {
  Json j = Json::array();
  for (const auto& r : removals) j.push_back({{"column", r.column}, {"reason", r.reason}});
  return j;
}

Json to_json(const FeatureGraph& graph) { return Json::parse(to_json_text(graph)); }

FeatureGraph graph_from_json(const Json& j) { return graph_from_json_text(j.dump()); }

Json to_json(const FeatureGraph& graph, const CommunityPartition& p) {
  Json j;
  j["threshold"] = p.threshold;
  j["algorithm"] = to_string(p.algorithm);
  j["modularity"] = p.modularity_defined ? Json(p.modularity) : Json(nullptr);
  j["n_communities"] = p.community_count();
  auto& assignment = j["assignment"] = Json::object();
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) assignment[graph.nodes[i].name] = p.assignment[i];
  auto& communities = j["communities"] = Json::array();
  for (const auto& members : p.members()) {
    Json names = Json::array();
    for (auto m : members) names.push_back(graph.nodes[m].name);
    communities.push_back(names);
  }
  return j;
}

Json to_json(const FeatureGraph& graph, const SweepResult& sweep) {
  Json j;
  j["target"] = graph.target;
  j["kind"] = to_string(graph.kind);
  j["best"] = to_json(graph, sweep.best);
  auto& table = j["table"] = Json::array();
  for (const auto& row : sweep.table) {
    table.push_back({{"threshold", row.threshold},
                     {"algorithm", to_string(row.algorithm)},
                     {"modularity", number_or_null(row.modularity)},
                     {"n_communities", row.n_communities}});
  }
  return j;
}

SweepResult sweep_from_json(const FeatureGraph& graph, const Json& j) {
  return guarded("sweep", [&] {
    auto algorithm = [](const Json& v) {
      auto a = parse_algorithm(v.get<std::string>());
      if (!a) throw FormatError("unknown algorithm '" + v.get<std::string>() + "'");
      return *a;
    };
    SweepResult s;
    const auto& best = j.at("best");
    s.best.threshold = best.at("threshold").get<double>();
    s.best.algorithm = algorithm(best.at("algorithm"));
    s.best.modularity_defined = !best.at("modularity").is_null();
    s.best.modularity = s.best.modularity_defined ? best.at("modularity").get<double>() : 0.0;
    const auto& assignment = best.at("assignment");
    s.best.assignment.resize(graph.nodes.size());
    for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
      if (!assignment.contains(graph.nodes[i].name)) {
        throw FormatError("sweep: node '" + graph.nodes[i].name + "' has no community");
      }
      s.best.assignment[i] = assignment.at(graph.nodes[i].name).get<std::size_t>();
    }
    for (const auto& row : j.at("table")) {
      SweepRow r;
      r.threshold = row.at("threshold").get<double>();
      r.algorithm = algorithm(row.at("algorithm"));
      if (!row.at("modularity").is_null()) r.modularity = row.at("modularity").get<double>();
      r.n_communities = row.at("n_communities").get<std::size_t>();
      s.table.push_back(r);
    }
    return s;
  });
}

Json to_json(const SelectedFeatureSet& set) {
  Json j;
  j["target"] = set.target;
  auto& features = j["features"] = Json::array();
  for (const auto& f : set.features) {
    features.push_back({{"name", f.name},
                        {"community", f.community},
                        {"spec", f.spec},
                        {"shell_index", f.shell_index},
                        {"k_prime", f.k_prime},
                        {"rule", f.rule}});
  }
  auto& exclusions = j["exclusions"] = Json::array();
  for (const auto& e : set.exclusions) exclusions.push_back({{"name", e.name}, {"reason", e.reason}});
  return j;
}

SelectedFeatureSet selection_from_json(const Json& j) {
  return guarded("selection", [&] {
    SelectedFeatureSet s;
    s.target = j.at("target").get<std::string>();
    for (const auto& f : j.at("features")) {
      s.features.push_back({f.at("name").get<std::string>(), f.at("community").get<std::size_t>(),
                            f.at("spec").get<double>(), f.at("shell_index").get<std::uint64_t>(),
                            f.at("k_prime").get<std::uint64_t>(), f.at("rule").get<std::string>()});
    }
    for (const auto& e : j.at("exclusions")) {
      s.exclusions.push_back({e.at("name").get<std::string>(), e.at("reason").get<std::string>()});
    }
    return s;
  });
}

Json to_json(const std::map<std::string, ColumnSummary>& summaries) {
  Json j = Json::object();
  for (const auto& [name, s] : summaries) {
    j[name] = {{"count", s.count},   {"mean", s.mean},     {"std", s.std},
               {"min", s.min},       {"max", s.max},       {"median", s.median},
               {"skew", to_string(s.skew_direction)}};
  }
  return j;
}

Json to_json(const std::vector<OverlapEntry>& report) {
  Json j = Json::array();
  for (const auto& e : report) {
    j.push_back({{"alarm_start", e.alarm.start},
                 {"alarm_end", e.alarm.end},
                 {"column", e.column},
                 {"overlap_seconds", e.overlap_seconds},
                 {"fraction", e.fraction}});
  }
  return j;
}

namespace {

Json counts_json(const ClassCounts& c) { return {{"negative", c.negative}, {"positive", c.positive}}; }

}  // namespace

Json to_json(const SamplingReport& report) {
  Json j;
  j["original"] = counts_json(report.original);
  j["undersampled"] = counts_json(report.undersampled);
  j["balanced"] = counts_json(report.balanced);
  j["interval"] = report.interval;
  j["interval_infeasible"] = report.interval_infeasible;
  auto& trace = j["trace"] = Json::array();
  for (const auto& p : report.trace) trace.push_back({{"interval", p.interval}, {"size", p.size}});
  return j;
}

Json to_json(const Standardizer& s) { return {{"mean", s.mean}, {"scale", s.scale}}; }

Standardizer standardizer_from_json(const Json& j) {
  return guarded("standardizer", [&] {
    Standardizer s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.scale = j.at("scale").get<std::vector<double>>();
    if (s.mean.size() != s.scale.size()) throw FormatError("standardizer: mean/scale length mismatch");
    return s;
  });
}

Json to_json(const ForestParams& p) {
  return {{"n_trees", p.n_trees},
          {"max_depth", p.max_depth},
          {"min_leaf", p.min_leaf},
          {"max_features", p.max_features},
          {"bootstrap", p.bootstrap}};
}

namespace {

ForestParams params_from_json(const Json& j) {
  ForestParams p;
  p.n_trees = j.at("n_trees").get<std::size_t>();
  p.max_depth = j.at("max_depth").get<std::size_t>();
  p.min_leaf = j.at("min_leaf").get<std::size_t>();
  p.max_features = j.at("max_features").get<std::size_t>();
  p.bootstrap = j.at("bootstrap").get<bool>();
  return p;
}

}  // namespace

Json to_json(const ForestModel& model) {
  Json j;
  j["format"] = "pdm-forest";
  j["version"] = kForestFormatVersion;
  j["seed"] = model.seed;
  j["n_features"] = model.n_features;
  j["feature_names"] = model.feature_names;
  j["params"] = to_json(model.params);
  auto& trees = j["trees"] = Json::array();
  for (const auto& t : model.trees) {
    Json nodes = Json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back(Json::array({n.feature, n.threshold, n.left, n.right, n.counts[0], n.counts[1]}));
    }
    trees.push_back({{"nodes", nodes}});
  }
  return j;
}

ForestModel forest_from_json(const Json& j) {
  return guarded("forest", [&] {
    if (j.at("format").get<std::string>() != "pdm-forest") throw FormatError("not a forest dump");
    const int version = j.at("version").get<int>();
    if (version != kForestFormatVersion) {
      throw FormatError("unsupported forest format version " + std::to_string(version));
    }
    ForestModel m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.n_features = j.at("n_features").get<std::size_t>();
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.params = params_from_json(j.at("params"));
    for (const auto& t : j.at("trees")) {
      DecisionTree tree;
      for (const auto& n : t.at("nodes")) {
        TreeNode node;
        node.feature = n.at(0).get<int>();
        node.threshold = n.at(1).get<double>();
        node.left = n.at(2).get<int>();
        node.right = n.at(3).get<int>();
        node.counts = {n.at(4).get<std::size_t>(), n.at(5).get<std::size_t>()};
        tree.nodes.push_back(node);
      }
      if (tree.nodes.empty()) throw FormatError("forest: empty tree");
      for (const auto& node : tree.nodes) {
        const auto size = static_cast<int>(tree.nodes.size());
        if (!node.leaf() && (node.left <= 0 || node.right <= 0 || node.left >= size || node.right >= size ||
                             static_cast<std::size_t>(node.feature) >= m.n_features)) {
          throw FormatError("forest: malformed node");
        }
      }
      m.trees.push_back(std::move(tree));
    }
    return m;
  });
}

Json to_json(const EvalReport& r) {
  Json j;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["precision_undefined"] = r.precision_undefined;
  j["recall_undefined"] = r.recall_undefined;
  j["f1_undefined"] = r.f1_undefined;
  j["confusion"] = {{"tn", r.confusion.tn}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn}, {"tp", r.confusion.tp}};
  j["seed"] = r.seed;
  j["params"] = to_json(r.params);
  return j;
}

Json to_json(const GridPoint& p) {
  return {{"k_neighbors", p.k_neighbors},
          {"enn_n_neighbors", p.enn_n_neighbors},
          {"n_trees", p.n_trees},
          {"max_depth", p.max_depth}};
}

Json to_json(const std::vector<Importance>& ranking) {
  Json j = Json::array();
  for (const auto& i : ranking) j.push_back({{"feature", i.feature}, {"mean_f1_drop", i.mean_drop}});
  return j;
}

Json to_json(const Explanation& e) {
  Json j;
  j["instance"] = e.instance;
  j["intercept"] = e.intercept;
  j["r2"] = e.r2;
  j["r2_undefined"] = e.r2_undefined;
  j["ridge_fallback"] = e.ridge_fallback;
  auto& w = j["weights"] = Json::array();
  for (const auto& f : e.weights) w.push_back({{"feature", f.feature}, {"weight", f.weight}});
  return j;
}

Json to_json(const SyntheticSpec& spec) {
  Json j;
  j["n_rows"] = spec.n_rows;
  auto& clusters = j["clusters"] = Json::array();
  for (const auto& c : spec.clusters) clusters.push_back({{"continuous", c.continuous}, {"categorical", c.categorical}});
  j["rho"] = spec.rho;
  j["alarm"] = {{"driving_cluster", spec.alarm.driving_cluster},
                {"threshold", spec.alarm.threshold},
                {"lead", spec.alarm.lead}};
  j["missing_rate"] = spec.missing_rate;
  j["stationary_fraction"] = spec.stationary_fraction;
  j["categorical_bins"] = spec.categorical_bins;
  j["protocol_columns"] = spec.protocol_columns;
  j["start"] = spec.start;
  return j;
}

SyntheticSpec synthetic_spec_from_json(const Json& j) {
  return guarded("synthetic spec", [&] {
    SyntheticSpec s;
    s.n_rows = j.value("n_rows", s.n_rows);
    if (j.contains("clusters")) {
      s.clusters.clear();
      for (const auto& c : j.at("clusters")) {
        s.clusters.push_back({c.value("continuous", std::size_t{0}), c.value("categorical", std::size_t{0})});
      }
    }
    s.rho = j.value("rho", s.rho);
    if (j.contains("alarm")) {
      const auto& a = j.at("alarm");
      s.alarm.driving_cluster = a.value("driving_cluster", s.alarm.driving_cluster);
      s.alarm.threshold = a.value("threshold", s.alarm.threshold);
      s.alarm.lead = a.value("lead", s.alarm.lead);
    }
    s.missing_rate = j.value("missing_rate", s.missing_rate);
    s.stationary_fraction = j.value("stationary_fraction", s.stationary_fraction);
    s.categorical_bins = j.value("categorical_bins", s.categorical_bins);
    s.protocol_columns = j.value("protocol_columns", s.protocol_columns);
    s.start = j.value("start", s.start);
    return s;
  });
}

Json to_json(const SyntheticManifest& m) {
  Json j;
  j["target"] = m.target;
  j["clusters"] = m.clusters;
  j["driving_cluster"] = m.driving_cluster;
  j["driving_features"] = m.driving_features;
  j["threshold"] = m.threshold;
  j["lead"] = m.lead;
  j["stationary_columns"] = m.stationary_columns;
  j["crossings"] = m.crossings;
  j["onsets"] = m.onsets;
  return j;
}

SyntheticManifest synthetic_manifest_from_json(const Json& j) {
  return guarded("synthetic manifest", [&] {
    SyntheticManifest m;
    m.target = j.at("target").get<std::string>();
    m.clusters = j.at("clusters").get<std::vector<std::vector<std::string>>>();
    m.driving_cluster = j.at("driving_cluster").get<std::size_t>();
    m.driving_features = j.at("driving_features").get<std::vector<std::string>>();
    m.threshold = j.at("threshold").get<double>();
    m.lead = j.at("lead").get<std::int64_t>();
    m.stationary_columns = j.value("stationary_columns", std::vector<std::string>{});
    m.crossings = j.at("crossings").get<std::vector<std::int64_t>>();
    m.onsets = j.at("onsets").get<std::vector<std::int64_t>>();
    return m;
  });
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const Json& j, const std::filesystem::path& path) { write_text(j.dump(2) + "\n", path); }

Json read_json(const std::filesystem::path& path) {
  const auto text = read_text(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

}  // namespace

void write_dataset(const LabeledDataset& data, const std::filesystem::path& stem, const Json& extra) {
  {
    std::ostringstream out;
    csv::write_record(out, data.feature_names);
    std::vector<std::string> fields(data.X.cols());
    for (std::size_t r = 0; r < data.rows(); ++r) {
      for (std::size_t c = 0; c < data.X.cols(); ++c) fields[c] = csv::format_double(data.X(r, c));
      csv::write_record(out, fields);
    }
    write_text(out.str(), with_suffix(stem, ".features.csv"));
  }
  {
    std::ostringstream out;
    csv::write_record(out, {"timestamp", "label"});
    for (std::size_t r = 0; r < data.rows(); ++r) {
      csv::write_record(out, {std::to_string(data.timestamps[r]), std::to_string(data.y[r])});
    }
    write_text(out.str(), with_suffix(stem, ".labels.csv"));
  }
  Json sidecar;
  sidecar["rows"] = data.rows();
  sidecar["feature_names"] = data.feature_names;
  sidecar["group"] = data.group;
  sidecar["sources"] = data.sources;
  for (const auto& [key, value] : extra.items()) sidecar[key] = value;
  write_json(sidecar, with_suffix(stem, ".json"));
}

LabeledDataset read_dataset(const std::filesystem::path& stem) {
  const Json sidecar = read_json(with_suffix(stem, ".json"));
  LabeledDataset data;
  guarded("dataset sidecar", [&] {
    data.feature_names = sidecar.at("feature_names").get<std::vector<std::string>>();
    data.group = sidecar.at("group").get<std::vector<int>>();
    data.sources = sidecar.at("sources").get<std::vector<std::string>>();
    return 0;
  });
  const std::size_t d = data.feature_names.size();
  auto parse_number = [](const std::string& s, const std::filesystem::path& p) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw FormatError("'" + p.string() + "': bad number '" + s + "'");
    }
  };
  {
    const auto path = with_suffix(stem, ".features.csv");
    std::istringstream in(read_text(path));
    std::vector<std::string> fields;
    if (!csv::read_record(in, fields) || fields != data.feature_names) {
      throw FormatError("'" + path.string() + "': header does not match the sidecar");
    }
    data.X = Matrix(0, d);
    std::vector<double> row(d);
    while (csv::read_record(in, fields)) {
      if (fields.size() != d) throw FormatError("'" + path.string() + "': wrong field count");
      for (std::size_t c = 0; c < d; ++c) row[c] = parse_number(fields[c], path);
      data.X.append_row(row);
    }
  }
  {
    const auto path = with_suffix(stem, ".labels.csv");
    std::istringstream in(read_text(path));
    std::vector<std::string> fields;
    if (!csv::read_record(in, fields)) throw FormatError("'" + path.string() + "': missing header");
    while (csv::read_record(in, fields)) {
      if (fields.size() != 2) throw FormatError("'" + path.string() + "': wrong field count");
      data.timestamps.push_back(static_cast<std::int64_t>(parse_number(fields[0], path)));
      data.y.push_back(static_cast<int>(parse_number(fields[1], path)));
    }
  }
  if (data.y.size() != data.X.rows()) throw FormatError("dataset features and labels differ in length");
  if (data.X.rows() == 0) data.X = Matrix(0, d);
  return data;
}

}  // namespace pdm
