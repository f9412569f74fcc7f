#include "pdm/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "pdm/error.hpp"
#include "pdm/graph.hpp"
#include "pdm/hash.hpp"
#include "pdm/rng.hpp"
#include "pdm/scoring.hpp"
#include "pdm/stats.hpp"

namespace fs = std::filesystem;

namespace pdm {

// ---------------------------------------------------------------- config

namespace {

void check_keys(const Json& j, const char* where, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void read_key(const Json& j, const char* key, T& into) {
  if (j.contains(key) && !j.at(key).is_null()) into = j.at(key).get<T>();
}

StationaryClause clause_from_json(const Json& j) {
  StationaryClause c;
  if (j.is_string()) {
    c.column = j.get<std::string>();
    return c;
  }
  check_keys(j, "stationary_predicate entry", {"column", "op", "threshold"});
  c.column = j.at("column").get<std::string>();
  if (j.contains("op")) {
    auto op = parse_comparator(j.at("op").get<std::string>());
    if (!op) throw ConfigError("unknown comparator '" + j.at("op").get<std::string>() + "'");
    c.op = *op;
  }
  read_key(j, "threshold", c.threshold);
  return c;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const Json& j) {
  check_keys(j, "config",
             {"input", "timestamp_column", "targets", "categorical_cap", "protocol_patterns",
              "stationary_predicate", "impute_before_filter", "zscore_threshold", "alarm_min_duration",
              "thresholds", "algorithms", "features_per_community", "exclusions", "sampling", "model", "explain",
              "seed", "output_dir", "jobs"});
  if (!j.contains("seed") || j.at("seed").is_null()) throw ConfigError("a seed is required");
  const auto& seed = j.at("seed");
  if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
    throw ConfigError("seed must be a non-negative integer");
  }
  PipelineConfig c;
  try {
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("input")) c.input = j.at("input").get<std::string>();
    read_key(j, "timestamp_column", c.timestamp_column);
    read_key(j, "targets", c.targets);
    read_key(j, "categorical_cap", c.categorical_cap);
    read_key(j, "protocol_patterns", c.protocol_patterns);
    if (j.contains("stationary_predicate")) {
      c.stationary.clear();
      for (const auto& clause : j.at("stationary_predicate")) c.stationary.push_back(clause_from_json(clause));
    }
    read_key(j, "impute_before_filter", c.impute_before_filter);
    read_key(j, "zscore_threshold", c.zscore_threshold);
    read_key(j, "alarm_min_duration", c.alarm_min_duration);
    read_key(j, "thresholds", c.thresholds);
    if (j.contains("algorithms")) {
      c.algorithms.clear();
      for (const auto& a : j.at("algorithms")) {
        auto alg = parse_algorithm(a.get<std::string>());
        if (!alg) throw ConfigError("unknown algorithm '" + a.get<std::string>() + "'");
        c.algorithms.push_back(*alg);
      }
    }
    read_key(j, "features_per_community", c.features_per_community);
    read_key(j, "exclusions", c.exclusions);
    if (j.contains("sampling")) {
      const auto& s = j.at("sampling");
      check_keys(s, "sampling",
                 {"horizon", "num_sample", "min_interval", "max_interval", "target_size", "k_neighbors",
                  "enn_n_neighbors", "smote_ratio", "train_fraction", "balance_before_split"});
      read_key(s, "horizon", c.sampling.horizon);
      read_key(s, "num_sample", c.sampling.num_sample);
      read_key(s, "min_interval", c.sampling.min_interval);
      read_key(s, "max_interval", c.sampling.max_interval);
      if (s.contains("target_size") && !s.at("target_size").is_null()) {
        c.sampling.target_size = s.at("target_size").get<std::size_t>();
      }
      read_key(s, "k_neighbors", c.sampling.k_neighbors);
      read_key(s, "enn_n_neighbors", c.sampling.enn_n_neighbors);
      read_key(s, "smote_ratio", c.sampling.smote_ratio);
      read_key(s, "train_fraction", c.sampling.train_fraction);
      read_key(s, "balance_before_split", c.sampling.balance_before_split);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      check_keys(m, "model", {"grid", "cv_folds", "random_samples", "min_leaf", "importance_repeats"});
      if (m.contains("grid")) {
        const auto& g = m.at("grid");
        check_keys(g, "model.grid", {"k_neighbors", "enn_n_neighbors", "n_trees", "max_depth"});
        read_key(g, "k_neighbors", c.model.grid.k_neighbors);
        read_key(g, "enn_n_neighbors", c.model.grid.enn_n_neighbors);
        read_key(g, "n_trees", c.model.grid.n_trees);
        read_key(g, "max_depth", c.model.grid.max_depth);
      }
      read_key(m, "cv_folds", c.model.cv_folds);
      read_key(m, "random_samples", c.model.random_samples);
      read_key(m, "min_leaf", c.model.min_leaf);
      read_key(m, "importance_repeats", c.model.importance_repeats);
    }
    if (j.contains("explain")) {
      const auto& e = j.at("explain");
      check_keys(e, "explain", {"instances", "n_perturb", "kernel_width", "top_k"});
      read_key(e, "instances", c.explain.instances);
      read_key(e, "n_perturb", c.explain.n_perturb);
      read_key(e, "kernel_width", c.explain.kernel_width);
      read_key(e, "top_k", c.explain.top_k);
    }
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    read_key(j, "jobs", c.jobs);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }

  if (c.targets.empty()) throw ConfigError("at least one target alarm is required");
  if (c.thresholds.empty()) throw ConfigError("threshold ladder is empty");
  for (std::size_t i = 0; i < c.thresholds.size(); ++i) {
    if (!(c.thresholds[i] >= 0.0 && c.thresholds[i] <= 1.0)) throw ConfigError("thresholds must lie in [0, 1]");
    if (i > 0 && !(c.thresholds[i] > c.thresholds[i - 1])) throw ConfigError("thresholds must be ascending");
  }
  if (c.algorithms.empty()) throw ConfigError("algorithm list is empty");
  if (c.features_per_community < 1 || c.features_per_community > 3) {
    throw ConfigError("features_per_community must be 1, 2 or 3");
  }
  if (c.sampling.horizon <= 0) throw ConfigError("horizon must be positive");
  if (c.sampling.num_sample == 0) throw ConfigError("num_sample must be positive");
  if (c.sampling.min_interval <= 0 || c.sampling.min_interval > c.sampling.max_interval) {
    throw ConfigError("need 0 < min_interval <= max_interval");
  }
  if (!(c.sampling.train_fraction > 0.0 && c.sampling.train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  if (!(c.sampling.smote_ratio > 0.0)) throw ConfigError("smote_ratio must be positive");
  if (c.model.cv_folds < 2) throw ConfigError("cv_folds must be at least 2");
  if (c.model.grid.points().empty()) throw ConfigError("model grid is empty");
  if (c.model.importance_repeats == 0) throw ConfigError("importance_repeats must be positive");
  if (c.explain.n_perturb < 2) throw ConfigError("explain.n_perturb must be at least 2");
  if (c.jobs == 0) c.jobs = 1;
  return c;
}

Json PipelineConfig::to_json() const {
  Json j;
  j["input"] = input.string();
  j["timestamp_column"] = timestamp_column;
  j["targets"] = targets;
  j["categorical_cap"] = categorical_cap;
  j["protocol_patterns"] = protocol_patterns;
  auto& st = j["stationary_predicate"] = Json::array();
  for (const auto& c : stationary) st.push_back({{"column", c.column}, {"op", pdm::to_string(c.op)}, {"threshold", c.threshold}});
  j["impute_before_filter"] = impute_before_filter;
  j["zscore_threshold"] = zscore_threshold;
  j["alarm_min_duration"] = alarm_min_duration;
  j["thresholds"] = thresholds;
  auto& algs = j["algorithms"] = Json::array();
  for (auto a : algorithms) algs.push_back(pdm::to_string(a));
  j["features_per_community"] = features_per_community;
  j["exclusions"] = exclusions;
  j["sampling"] = {{"horizon", sampling.horizon},
                   {"num_sample", sampling.num_sample},
                   {"min_interval", sampling.min_interval},
                   {"max_interval", sampling.max_interval},
                   {"target_size", sampling.target_size ? Json(*sampling.target_size) : Json(nullptr)},
                   {"k_neighbors", sampling.k_neighbors},
                   {"enn_n_neighbors", sampling.enn_n_neighbors},
                   {"smote_ratio", sampling.smote_ratio},
                   {"train_fraction", sampling.train_fraction},
                   {"balance_before_split", sampling.balance_before_split}};
  j["model"] = {{"grid",
                 {{"k_neighbors", model.grid.k_neighbors},
                  {"enn_n_neighbors", model.grid.enn_n_neighbors},
                  {"n_trees", model.grid.n_trees},
                  {"max_depth", model.grid.max_depth}}},
                {"cv_folds", model.cv_folds},
                {"random_samples", model.random_samples},
                {"min_leaf", model.min_leaf},
                {"importance_repeats", model.importance_repeats}};
  j["explain"] = {{"instances", explain.instances},
                  {"n_perturb", explain.n_perturb},
                  {"kernel_width", explain.kernel_width},
                  {"top_k", explain.top_k}};
  j["seed"] = seed;
  j["output_dir"] = output_dir.string();
  j["jobs"] = jobs;
  return j;
}

const char* to_string(Stage s) noexcept {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Stats: return "stats";
    case Stage::Graph: return "graph";
    case Stage::Communities: return "communities";
    case Stage::Select: return "select";
    case Stage::Sample: return "sample";
    case Stage::Train: return "train";
    case Stage::Explain: return "explain";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view text) {
  for (auto s : kStages) {
    if (text == to_string(s)) return s;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- stages

namespace {

std::vector<Stage> dependencies(Stage s) {
  switch (s) {
    case Stage::Ingest: return {};
    case Stage::Stats: return {Stage::Ingest};
    case Stage::Graph: return {Stage::Stats};
    case Stage::Communities: return {Stage::Graph};
    case Stage::Select: return {Stage::Stats, Stage::Graph, Stage::Communities};
    case Stage::Sample: return {Stage::Ingest, Stage::Select};
    case Stage::Train: return {Stage::Sample};
    case Stage::Explain: return {Stage::Sample, Stage::Train};
  }
  return {};
}

struct Family {
  const char* name;
  FeatureKind kind;
};

constexpr Family kFamilies[] = {{"continuous", FeatureKind::Continuous}, {"categorical", FeatureKind::Categorical}};

/// Collects the files a stage writes, relative to the artifact root.
class StageWriter {
 public:
  StageWriter(fs::path root, Stage stage) : root_(std::move(root)), stage_(stage) {}

  fs::path out(const std::string& relative) {
    const fs::path full = root_ / relative;
    fs::create_directories(full.parent_path());
    outputs_.insert(relative);
    return full;
  }

  fs::path in(const std::string& relative) const {
    const fs::path full = root_ / relative;
    if (!fs::exists(full)) throw IoError("missing artifact '" + full.string() + "'");
    return full;
  }

  bool has(const std::string& relative) const { return fs::exists(root_ / relative); }

  const std::set<std::string>& outputs() const { return outputs_; }
  const fs::path& root() const { return root_; }
  Stage stage() const { return stage_; }

 private:
  fs::path root_;
  Stage stage_;
  std::set<std::string> outputs_;
};

std::uint64_t stage_seed(const PipelineConfig& c, const std::string& unit) { return derive_seed(c.seed, fnv1a(unit)); }

std::string format_number(double v) { return csv::format_double(v); }

void write_csv(const std::vector<std::vector<std::string>>& rows, const fs::path& path) {
  std::ostringstream out;
  for (const auto& r : rows) csv::write_record(out, r);
  write_text(out.str(), path);
}

struct Loaded {
  TimeTable table;
  Schema schema;
};

Loaded load_clean(const PipelineConfig& c, const StageWriter& w) {
  Loaded l;
  l.table = parse_table(w.in("ingest/table.csv"), c.timestamp_column);
  l.schema = schema_from_json(read_json(w.in("ingest/schema.json")));
  return l;
}

std::vector<std::string> feature_names(const PipelineConfig& c, const Schema& schema, FeatureKind kind) {
  std::vector<std::string> out;
  for (const auto& [name, spec] : schema) {
    if (spec.kind == kind && std::find(c.targets.begin(), c.targets.end(), name) == c.targets.end()) {
      out.push_back(name);
    }
  }
  return out;
}

void ingest_stage(const PipelineConfig& c, StageWriter& w) {
  if (c.input.empty()) throw ConfigError("no input file configured");
  auto table = parse_table(c.input, c.timestamp_column);
  auto schema = infer_feature_kinds(table, c.categorical_cap, c.targets);
  for (const auto& t : c.targets) {
    if (!schema.contains(t)) throw SchemaError("target '" + t + "' is not a column of the input");
  }
  auto dropped = drop_uninformative(table, schema, c.protocol_patterns);
  for (const auto& r : dropped.removed) {
    if (std::find(c.targets.begin(), c.targets.end(), r.column) != c.targets.end()) {
      throw DegenerateDatasetError("target '" + r.column + "' was removed (" + r.reason + ")");
    }
  }
  Schema kept;
  for (const auto& col : dropped.table.columns) kept[col.name] = schema.at(col.name);
  TimeTable clean = std::move(dropped.table);
  if (c.impute_before_filter) {
    clean = filter_stationary(impute(clean, kept), kept, c.stationary);
  } else {
    clean = impute(filter_stationary(clean, kept, c.stationary), kept);
  }
  if (clean.rows() == 0) throw EmptyDatasetError("no rows left after stationary filtering");

  std::map<std::string, ColumnSummary> summaries;
  for (const auto& col : clean.columns) summaries[col.name] = summarize(col.values);

  write_table(clean, w.out("ingest/table.csv"));
  write_json(to_json(kept), w.out("ingest/schema.json"));
  write_json(to_json(dropped.removed), w.out("ingest/removals.json"));
  write_json(to_json(summaries), w.out("ingest/summary.json"));
}

void stats_stage(const PipelineConfig& c, StageWriter& w) {
  const auto [table, schema] = load_clean(c, w);
  const auto continuous = feature_names(c, schema, FeatureKind::Continuous);
  const auto categorical = feature_names(c, schema, FeatureKind::Categorical);

  AssociationMatrix pearson{AssociationMethod::Pearson, {}, {}};
  if (!continuous.empty()) pearson = pearson_matrix(table, continuous, c.jobs);
  write_json(to_json(pearson), w.out("stats/pearson.json"));
  AssociationMatrix cramers{AssociationMethod::CramersV, {}, {}};
  if (!categorical.empty()) cramers = cramers_v_matrix(table, categorical, c.jobs);
  write_json(to_json(cramers), w.out("stats/cramers_v.json"));

  std::map<std::string, IntervalSet> anomalies;
  Json anomaly_json = Json::object();
  for (const auto& name : continuous) {
    anomalies[name] = zscore_anomalies(table.timestamps, table.column(name).values, c.zscore_threshold);
    anomaly_json[name] = to_json(anomalies[name]);
  }
  write_json(anomaly_json, w.out("stats/anomalies.json"));

  std::vector<std::string> features = continuous;
  features.insert(features.end(), categorical.begin(), categorical.end());
  for (const auto& t : c.targets) {
    write_json(to_json(target_relevance(table, schema, t, features)), w.out("stats/" + t + "/relevance.json"));
    const auto alarms = alarm_active_intervals(table, t, c.alarm_min_duration);
    write_json(to_json(alarms), w.out("stats/" + t + "/alarms.json"));
    std::vector<std::vector<std::string>> rows{{"alarm_start", "alarm_end", "column", "overlap_seconds", "fraction"}};
    for (const auto& e : anomaly_overlap_report(alarms, anomalies)) {
      rows.push_back({std::to_string(e.alarm.start), std::to_string(e.alarm.end), e.column,
                      std::to_string(e.overlap_seconds), format_number(e.fraction)});
    }
    write_csv(rows, w.out("stats/" + t + "/overlap.csv"));
  }
}

void graph_stage(const PipelineConfig& c, StageWriter& w) {
  const auto pearson = association_from_json(read_json(w.in("stats/pearson.json")));
  const auto cramers = association_from_json(read_json(w.in("stats/cramers_v.json")));
  for (const auto& t : c.targets) {
    const auto relevance = relevance_from_json(read_json(w.in("stats/" + t + "/relevance.json")));
    for (const auto& family : kFamilies) {
      const auto& assoc = family.kind == FeatureKind::Continuous ? pearson : cramers;
      if (assoc.names.empty()) continue;
      const auto g = build_feature_graph(assoc, relevance);
      const std::string stem = "graph/" + t + "/" + family.name;
      export_graph(g, GraphFormat::Json, w.out(stem + ".json"));
      export_graph(g, GraphFormat::GraphML, w.out(stem + ".graphml"));
      export_graph(g, GraphFormat::Dot, w.out(stem + ".dot"));
    }
  }
}

void communities_stage(const PipelineConfig& c, StageWriter& w) {
  for (const auto& t : c.targets) {
    for (const auto& family : kFamilies) {
      const std::string graph_file = "graph/" + t + "/" + family.name + ".json";
      if (!w.has(graph_file)) continue;
      const auto g = read_graph_json(w.in(graph_file));
      Json out;
      try {
        const auto sweep = detect_dynamic(g, c.thresholds, c.algorithms,
                                          stage_seed(c, "communities/" + t + "/" + family.name), c.jobs);
        out = to_json(g, sweep);
      } catch (const NoStructureError&) {
        out = {{"target", g.target}, {"kind", to_string(g.kind)}, {"no_structure", true}};
      }
      write_json(out, w.out("communities/" + t + "/" + family.name + ".json"));
    }
  }
}

void select_stage(const PipelineConfig& c, StageWriter& w) {
  for (const auto& t : c.targets) {
    const auto relevance = relevance_from_json(read_json(w.in("stats/" + t + "/relevance.json")));
    SelectedFeatureSet merged;
    merged.target = t;
    std::vector<std::vector<std::string>> rows{{"family", "community", "feature", "spec", "k_prime", "shell_index"}};
    std::size_t offset = 0;
    for (const auto& family : kFamilies) {
      const std::string sweep_file = "communities/" + t + "/" + family.name + ".json";
      if (!w.has(sweep_file)) continue;
      const Json sweep_json = read_json(w.in(sweep_file));
      if (sweep_json.contains("no_structure")) continue;
      const auto g = read_graph_json(w.in("graph/" + t + "/" + family.name + ".json"));
      const auto sweep = sweep_from_json(g, sweep_json);
      auto scores = score_partition(g, sweep.best, relevance, c.jobs);
      for (auto& s : scores) {
        for (const auto& m : s.members) {
          rows.push_back({family.name, std::to_string(s.community + offset), m, format_number(s.spec.at(m)),
                          std::to_string(s.kshell.at(m).k_prime), std::to_string(s.kshell.at(m).shell_index)});
        }
      }
      auto sel = select_distinctive(t, sweep.best, scores, c.exclusions, c.features_per_community);
      for (auto f : sel.features) {
        f.community += offset;
        merged.features.push_back(std::move(f));
      }
      merged.exclusions.insert(merged.exclusions.end(), sel.exclusions.begin(), sel.exclusions.end());
      offset += sweep.best.community_count();
    }
    if (merged.features.empty()) throw NoStructureError("no distinctive feature selected for target '" + t + "'");
    write_json(to_json(merged), w.out("select/" + t + "/selected.json"));
    std::string list;
    for (const auto& n : merged.names()) list += n + "\n";
    write_text(list, w.out("select/" + t + "/selected.txt"));
    write_csv(rows, w.out("select/" + t + "/scores.csv"));
  }
}

void sample_stage(const PipelineConfig& c, StageWriter& w) {
  const auto [table, schema] = load_clean(c, w);
  const auto& s = c.sampling;
  for (const auto& t : c.targets) {
    const auto selection = selection_from_json(read_json(w.in("select/" + t + "/selected.json")));
    const auto names = selection.names();
    const auto data = shift_labels(table, schema, t, s.horizon, names);
    const std::size_t positives = data.count(1);
    if (positives == 0) throw InsufficientMinorityError("no positive labels after shifting '" + t + "'");
    // Balanced target: as many inactive rows as active ones.
    const std::size_t target_size = s.target_size.value_or(2 * positives);
    const std::uint64_t seed = stage_seed(c, "sample/" + t);
    const auto search =
        find_optimal_interval(data, target_size, s.min_interval, s.max_interval, s.num_sample, derive_seed(seed, 1));
    auto under = time_interval_undersample(data, search.interval, s.num_sample, derive_seed(seed, 1));

    SamplingReport report;
    report.original = class_counts(data.y);
    report.undersampled = class_counts(under.y);
    report.interval = search.interval;
    report.interval_infeasible = search.infeasible;
    report.trace = search.trace;

    Standardizer standardizer;
    LabeledDataset train;
    LabeledDataset test;
    if (s.balance_before_split) {
      standardizer = Standardizer::fit(under);
      standardizer.apply(under);
      const auto over = smote(under.X, under.y, s.k_neighbors, s.smote_ratio, derive_seed(seed, 3), under.group);
      const auto edited = enn(over.X, over.y, s.enn_n_neighbors);
      LabeledDataset balanced = under;
      balanced.X = edited.X;
      balanced.y = edited.y;
      balanced.timestamps.clear();
      std::size_t next_removed = 0;
      for (std::size_t r = 0; r < over.y.size(); ++r) {
        if (next_removed < edited.removed.size() && edited.removed[next_removed] == r) {
          ++next_removed;
          continue;
        }
        balanced.timestamps.push_back(r < under.rows() ? under.timestamps[r]
                                                       : under.timestamps[over.origins[r - under.rows()].base]);
      }
      report.balanced = class_counts(balanced.y);
      const auto split = stratified_split(balanced.y, s.train_fraction, derive_seed(seed, 2));
      train = balanced.select(split.train);
      test = balanced.select(split.test);
    } else {
      const auto split = stratified_split(under.y, s.train_fraction, derive_seed(seed, 2));
      train = under.select(split.train);
      test = under.select(split.test);
      standardizer = Standardizer::fit(train);
      standardizer.apply(train);
      standardizer.apply(test);
      const auto balanced = smoteenn(train.X, train.y, s.k_neighbors, s.enn_n_neighbors, derive_seed(seed, 3),
                                     train.group, s.smote_ratio);
      report.balanced = balanced.after;
    }
    const Json extra = {{"target", t},
                        {"horizon", s.horizon},
                        {"standardization", to_json(standardizer)},
                        {"sampling_report", to_json(report)}};
    const std::string dir = "sample/" + t + "/";
    for (const char* part : {"train", "test"}) {
      for (const char* suffix : {".json", ".features.csv", ".labels.csv"}) w.out(dir + part + suffix);
      write_dataset(std::string_view(part) == "train" ? train : test, w.root() / (dir + part), extra);
    }
    write_json(to_json(report), w.out(dir + "report.json"));
  }
}

void train_stage(const PipelineConfig& c, StageWriter& w) {
  for (const auto& t : c.targets) {
    const std::string dir = "sample/" + t + "/";
    w.in(dir + "train.json");
    const auto train = read_dataset(w.root() / (dir + "train"));
    const auto test = read_dataset(w.root() / (dir + "test"));
    const std::uint64_t seed = stage_seed(c, "train/" + t);

    GridSearchOptions options;
    options.folds = c.model.cv_folds;
    options.random_samples = c.model.random_samples;
    options.min_leaf = c.model.min_leaf;
    options.balance = !c.sampling.balance_before_split;
    options.smote_ratio = c.sampling.smote_ratio;
    options.jobs = c.jobs;
    const auto search = grid_search(train, c.model.grid, options, derive_seed(seed, 1));

    Matrix X = train.X;
    std::vector<int> y = train.y;
    if (options.balance) {
      auto balanced = smoteenn(X, y, search.best.k_neighbors, search.best.enn_n_neighbors, derive_seed(seed, 2),
                               train.group, options.smote_ratio);
      X = std::move(balanced.X);
      y = std::move(balanced.y);
    }
    ForestParams params;
    params.n_trees = search.best.n_trees;
    params.max_depth = search.best.max_depth;
    params.min_leaf = c.model.min_leaf;
    auto model = train_forest(X, y, params, derive_seed(seed, 3), c.jobs);
    model.feature_names = train.feature_names;
    const auto report = evaluate(model, test);
    const auto importance =
        permutation_importance(model, test, c.model.importance_repeats, derive_seed(seed, 4), c.jobs);

    const std::string out = "train/" + t + "/";
    write_json(to_json(model), w.out(out + "model.json"));
    Json eval = to_json(report);
    eval["best_params"] = to_json(search.best);
    eval["test_rows"] = test.rows();
    write_json(eval, w.out(out + "eval.json"));
    write_json(to_json(importance), w.out(out + "importance.json"));
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"k_neighbors", "enn_n_neighbors", "n_trees", "max_depth"};
    for (std::size_t f = 0; f < c.model.cv_folds; ++f) header.push_back("fold_" + std::to_string(f + 1) + "_f1");
    header.push_back("mean_f1");
    rows.push_back(header);
    for (const auto& row : search.table) {
      std::vector<std::string> r{std::to_string(row.point.k_neighbors), std::to_string(row.point.enn_n_neighbors),
                                 std::to_string(row.point.n_trees), std::to_string(row.point.max_depth)};
      for (double f1 : row.fold_f1) r.push_back(format_number(f1));
      r.push_back(format_number(row.mean_f1));
      rows.push_back(r);
    }
    write_csv(rows, w.out(out + "cv_table.csv"));
  }
}

void explain_stage(const PipelineConfig& c, StageWriter& w) {
  for (const auto& t : c.targets) {
    const std::string dir = "sample/" + t + "/";
    w.in(dir + "train.json");
    const auto train = read_dataset(w.root() / (dir + "train"));
    const auto test = read_dataset(w.root() / (dir + "test"));
    const auto model = forest_from_json(read_json(w.in("train/" + t + "/model.json")));
    const std::uint64_t seed = stage_seed(c, "explain/" + t);

    // Boundary instances: test rows whose vote is closest to a tie.
    const auto votes = model.vote_fractions(test.X);
    std::vector<std::size_t> order(test.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(votes[a] - 0.5) < std::abs(votes[b] - 0.5);
    });
    order.resize(std::min(order.size(), c.explain.instances));

    LimeOptions options;
    options.n_perturb = c.explain.n_perturb;
    options.kernel_width = c.explain.kernel_width;
    options.top_k = c.explain.top_k;
    Json out = Json::array();
    for (auto i : order) {
      Json e = to_json(lime_explain(model, train, test, i, options, derive_seed(seed, i)));
      e["timestamp"] = format_iso8601(test.timestamps[i]);
      e["label"] = test.y[i];
      e["vote_fraction"] = votes[i];
      out.push_back(e);
    }
    write_json(out, w.out("explain/" + t + "/explanations.json"));
  }
}

void run_body(const PipelineConfig& c, StageWriter& w) {
  switch (w.stage()) {
    case Stage::Ingest: ingest_stage(c, w); break;
    case Stage::Stats: stats_stage(c, w); break;
    case Stage::Graph: graph_stage(c, w); break;
    case Stage::Communities: communities_stage(c, w); break;
    case Stage::Select: select_stage(c, w); break;
    case Stage::Sample: sample_stage(c, w); break;
    case Stage::Train: train_stage(c, w); break;
    case Stage::Explain: explain_stage(c, w); break;
  }
}

fs::path manifest_path(const fs::path& root, Stage s) { return root / to_string(s) / "manifest.json"; }

/// Output hashes recorded by a finished stage, verified against the files.
Json verified_outputs(const fs::path& root, Stage s) {
  const auto path = manifest_path(root, s);
  if (!fs::exists(path)) {
    throw IoError(std::string("stage '") + to_string(s) + "' has not been run in '" + root.string() + "'");
  }
  const Json manifest = read_json(path);
  const Json& outputs = manifest.at("outputs");
  for (const auto& o : outputs) {
    const auto file = root / o.at("path").get<std::string>();
    if (!fs::exists(file) || file_hash(file) != o.at("hash").get<std::string>()) {
      throw IoError(std::string("outputs of stage '") + to_string(s) + "' changed or are missing; rerun it");
    }
  }
  return outputs;
}

/// Config keys a stage reads; changing any other key leaves it up to date.
std::vector<std::string> config_keys(Stage s) {
  switch (s) {
    case Stage::Ingest:
      return {"timestamp_column", "targets", "categorical_cap", "protocol_patterns", "stationary_predicate",
              "impute_before_filter"};
    case Stage::Stats: return {"timestamp_column", "targets", "zscore_threshold", "alarm_min_duration"};
    case Stage::Graph: return {"targets"};
    case Stage::Communities: return {"targets", "thresholds", "algorithms", "seed"};
    case Stage::Select: return {"targets", "features_per_community", "exclusions"};
    case Stage::Sample: return {"timestamp_column", "targets", "sampling", "seed"};
    case Stage::Train: return {"targets", "sampling", "model", "seed"};
    case Stage::Explain: return {"targets", "explain", "seed"};
  }
  return {};
}

std::string inputs_hash(const PipelineConfig& c, Stage s, Json& inputs) {
  const Json full = c.to_json();
  Json config = Json::object();
  for (const auto& k : config_keys(s)) config[k] = full.at(k);
  inputs = Json::array();
  if (s == Stage::Ingest) {
    if (c.input.empty()) throw ConfigError("no input file configured");
    if (!fs::exists(c.input)) throw IoError("cannot read input '" + c.input.string() + "'");
    inputs.push_back({{"path", c.input.string()}, {"hash", file_hash(c.input)}});
  }
  for (auto dep : dependencies(s)) {
    for (const auto& o : verified_outputs(c.output_dir, dep)) inputs.push_back(o);
  }
  Json key;
  key["stage"] = to_string(s);
  key["config"] = config;
  key["inputs"] = inputs;
  return content_hash(key.dump());
}

bool up_to_date(const fs::path& root, Stage s, const std::string& hash) {
  const auto path = manifest_path(root, s);
  if (!fs::exists(path)) return false;
  try {
    const Json manifest = read_json(path);
    if (manifest.at("inputs_hash").get<std::string>() != hash) return false;
    verified_outputs(root, s);
    return true;
  } catch (const Error&) {
    return false;
  } catch (const nlohmann::json::exception&) {
    return false;
  }
}

[[noreturn]] void rethrow_in_stage(Stage s) {
  const std::string where = std::string("stage '") + to_string(s) + "': ";
  try {
    throw;
  } catch (const ValidationError& e) {
    throw ValidationError(where + e.what());
  } catch (const DataError& e) {
    throw DataError(where + e.what());
  } catch (const fs::filesystem_error& e) {
    throw IoError(where + e.what());
  }
}

}  // namespace

StageOutcome run_stage(const PipelineConfig& config, Stage stage, bool force) {
  StageOutcome outcome;
  outcome.stage = stage;
  const auto start = std::chrono::steady_clock::now();
  try {
    Json inputs;
    const std::string hash = inputs_hash(config, stage, inputs);
    if (!force && up_to_date(config.output_dir, stage, hash)) {
      outcome.skipped = true;
      return outcome;
    }
    const fs::path manifest = manifest_path(config.output_dir, stage);
    fs::remove(manifest);
    StageWriter writer(config.output_dir, stage);
    run_body(config, writer);

    Json m;
    m["stage"] = to_string(stage);
    m["seed"] = config.seed;
    m["inputs_hash"] = hash;
    m["inputs"] = inputs;
    auto& outputs = m["outputs"] = Json::array();
    for (const auto& rel : writer.outputs()) {
      outputs.push_back({{"path", rel}, {"hash", file_hash(config.output_dir / rel)}});
    }
    outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    fs::create_directories(manifest.parent_path());
    char timing[64];
    std::snprintf(timing, sizeof timing, "%.3f\n", outcome.seconds);
    write_text(timing, manifest.parent_path() / "timing.txt");
    write_json(m, manifest);
  } catch (...) {
    rethrow_in_stage(stage);
  }
  return outcome;
}

std::vector<StageOutcome> run_pipeline(const PipelineConfig& config, bool force) {
  std::vector<StageOutcome> outcomes;
  for (auto s : kStages) outcomes.push_back(run_stage(config, s, force));
  return outcomes;
}

// ---------------------------------------------------------------- compare

namespace {

SweepSummary summarize_sweep(const FeatureGraph& g, std::span<const double> thresholds,
                             std::span<const Algorithm> algorithms, std::uint64_t seed, std::size_t jobs) {
  SweepSummary s;
  try {
    const auto sweep = detect_dynamic(g, thresholds, algorithms, seed, jobs);
    s.threshold = sweep.best.threshold;
    s.algorithm = sweep.best.algorithm;
    s.modularity = sweep.best.modularity;
    s.n_communities = sweep.best.community_count();
  } catch (const NoStructureError&) {
    s.n_communities = g.nodes.size();
  }
  return s;
}

Json summary_json(const SweepSummary& s) {
  return {{"threshold", s.threshold},
          {"algorithm", to_string(s.algorithm)},
          {"modularity", s.modularity ? Json(*s.modularity) : Json(nullptr)},
          {"n_communities", s.n_communities}};
}

}  // namespace

CompareReport compare_graphs(const FeatureGraph& a, const FeatureGraph& b, std::span<const double> thresholds,
                             std::span<const Algorithm> algorithms, std::uint64_t seed, std::size_t jobs) {
  CompareReport r;
  r.spectral_distance = spectral_similarity(a, b);
  r.a = summarize_sweep(a, thresholds, algorithms, derive_seed(seed, 0), jobs);
  r.b = summarize_sweep(b, thresholds, algorithms, derive_seed(seed, 1), jobs);
  return r;
}

CompareReport compare_datasets(const fs::path& a, const fs::path& b, std::span<const double> thresholds,
                               std::span<const Algorithm> algorithms, std::uint64_t seed, std::size_t jobs) {
  return compare_graphs(read_graph_json(a), read_graph_json(b), thresholds, algorithms, seed, jobs);
}

Json to_json(const CompareReport& report) {
  Json j;
  j["spectral_distance"] = report.spectral_distance;
  j["a"] = summary_json(report.a);
  j["b"] = summary_json(report.b);
  return j;
}

}  // namespace pdm
