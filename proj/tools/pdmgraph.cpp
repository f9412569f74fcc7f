// pdmgraph: command-line front end for the feature-graph pipeline.

#include <cstdio>
#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pdm/error.hpp"
#include "pdm/ingest.hpp"
#include "pdm/pipeline.hpp"
#include "pdm/serialize.hpp"
#include "pdm/synthetic.hpp"

namespace {

using pdm::Json;

/// Flag values collected during parsing; merged over the config file.
struct Overrides {
  std::string config_path;
  Json values = Json::object();
  bool force = false;

  // Writes into values at a dotted path such as "sampling.horizon".
  void set(const std::string& key, Json v) {
    Json* node = &values;
    std::size_t start = 0;
    for (std::size_t dot; (dot = key.find('.', start)) != std::string::npos; start = dot + 1) {
      node = &(*node)[key.substr(start, dot - start)];
    }
    (*node)[key.substr(start)] = std::move(v);
  }
};

void merge(Json& base, const Json& patch) {
  for (const auto& [key, value] : patch.items()) {
    if (value.is_object() && base.contains(key) && base[key].is_object()) {
      merge(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

template <typename T>
void bind(CLI::App* app, Overrides& o, const std::string& flag, const std::string& key, const std::string& help) {
  app->add_option_function<T>(flag, [&o, key](const T& v) { o.set(key, v); }, help);
}

void bind_list(CLI::App* app, Overrides& o, const std::string& flag, const std::string& key,
               const std::string& help) {
  app->add_option_function<std::vector<std::string>>(
         flag, [&o, key](const std::vector<std::string>& v) { o.set(key, v); }, help)
      ->delimiter(',');
}

template <typename T>
void bind_numbers(CLI::App* app, Overrides& o, const std::string& flag, const std::string& key,
                  const std::string& help) {
  app->add_option_function<std::vector<T>>(
         flag, [&o, key](const std::vector<T>& v) { o.set(key, v); }, help)
      ->delimiter(',');
}

void common_options(CLI::App* app, Overrides& o, bool stochastic) {
  app->add_option("-c,--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  bind<std::string>(app, o, "-o,--out", "output_dir", "artifact directory");
  bind<std::size_t>(app, o, "-j,--jobs", "jobs", "max worker threads (results do not depend on it)");
  bind_list(app, o, "-t,--target", "targets", "target alarm column(s)");
  bind<std::string>(app, o, "--timestamp-column", "timestamp_column", "name of the timestamp column");
  if (stochastic) bind<std::uint64_t>(app, o, "-s,--seed", "seed", "random seed (required)");
  app->add_flag("--force", o.force, "rerun even when outputs are up to date");
}

void ingest_options(CLI::App* app, Overrides& o) {
  bind<std::string>(app, o, "-i,--input", "input", "input CSV");
  bind<std::size_t>(app, o, "--categorical-cap", "categorical_cap", "distinct-value cap for categorical typing");
  bind_list(app, o, "--protocol-pattern", "protocol_patterns", "column name patterns to drop");
  app->add_option_function<std::vector<std::string>>(
         "--stationary",
         [&o](const std::vector<std::string>& clauses) {
           static const std::regex form(R"(^\s*([^<>=]+?)\s*(<=|>=|==|<|>)\s*(\S+)\s*$)");
           Json list = Json::array();
           for (const auto& c : clauses) {
             std::smatch m;
             if (!std::regex_match(c, m, form)) throw CLI::ValidationError("--stationary", "expected COLUMN<=VALUE");
             list.push_back({{"column", m[1].str()}, {"op", m[2].str()}, {"threshold", std::stod(m[3].str())}});
           }
           o.set("stationary_predicate", list);
         },
         "stationary clause, e.g. vehicle_speed<=0 (repeatable; rows where all hold are dropped)")
      ->delimiter(',');
  app->add_flag_callback("--impute-before-filter", [&o] { o.set("impute_before_filter", true); },
                         "impute before stationary filtering");
}

void stats_options(CLI::App* app, Overrides& o) {
  bind<double>(app, o, "--zscore-threshold", "zscore_threshold", "anomaly |z| threshold");
  bind<std::int64_t>(app, o, "--alarm-min-duration", "alarm_min_duration", "minimum alarm interval (s)");
}

void community_options(CLI::App* app, Overrides& o) {
  bind_numbers<double>(app, o, "--thresholds", "thresholds", "ascending threshold ladder");
  bind_list(app, o, "--algorithms", "algorithms", "leiden,infomap,fast_greedy,louvain");
}

void select_options(CLI::App* app, Overrides& o) {
  bind<std::size_t>(app, o, "--per-community", "features_per_community", "features kept per community (1-3)");
  bind_list(app, o, "--exclude", "exclusions", "name patterns excluded after selection");
}

void sample_options(CLI::App* app, Overrides& o) {
  bind<std::int64_t>(app, o, "--horizon", "sampling.horizon", "label horizon (s)");
  bind<std::size_t>(app, o, "--num-sample", "sampling.num_sample", "rows kept per interval bucket");
  bind<std::int64_t>(app, o, "--min-interval", "sampling.min_interval", "smallest bucket width (s)");
  bind<std::int64_t>(app, o, "--max-interval", "sampling.max_interval", "largest bucket width (s)");
  bind<std::size_t>(app, o, "--target-size", "sampling.target_size", "undersampled size target");
  bind<std::size_t>(app, o, "--k-neighbors", "sampling.k_neighbors", "SMOTE neighbours");
  bind<std::size_t>(app, o, "--enn-neighbors", "sampling.enn_n_neighbors", "ENN neighbours");
  bind<double>(app, o, "--train-fraction", "sampling.train_fraction", "training share of the split");
  app->add_flag_callback("--balance-before-split", [&o] { o.set("sampling.balance_before_split", true); },
                         "apply SMOTEENN before the train/test split");
}

void train_options(CLI::App* app, Overrides& o) {
  bind<std::size_t>(app, o, "--cv-folds", "model.cv_folds", "cross-validation folds");
  bind<std::size_t>(app, o, "--random-samples", "model.random_samples", "random-search points (0 = full grid)");
  bind_numbers<std::size_t>(app, o, "--grid-k-neighbors", "model.grid.k_neighbors", "SMOTE k values");
  bind_numbers<std::size_t>(app, o, "--grid-enn-neighbors", "model.grid.enn_n_neighbors", "ENN n values");
  bind_numbers<std::size_t>(app, o, "--n-trees", "model.grid.n_trees", "forest sizes");
  bind_numbers<std::size_t>(app, o, "--max-depth", "model.grid.max_depth", "tree depths");
  bind<std::size_t>(app, o, "--min-leaf", "model.min_leaf", "minimum rows per leaf");
}

void explain_options(CLI::App* app, Overrides& o) {
  bind<std::size_t>(app, o, "--instances", "explain.instances", "boundary instances to explain");
  bind<std::size_t>(app, o, "--n-perturb", "explain.n_perturb", "perturbations per instance");
  bind<double>(app, o, "--kernel-width", "explain.kernel_width", "kernel width (0 = 0.75 sqrt(d))");
  bind<std::size_t>(app, o, "--top-k", "explain.top_k", "features reported per explanation");
}

pdm::PipelineConfig load_config(const Overrides& o, bool stochastic) {
  Json j = o.config_path.empty() ? Json::object() : pdm::read_json(o.config_path);
  if (!j.is_object()) throw pdm::ConfigError("config file must hold a JSON object");
  merge(j, o.values);
  if (!j.contains("seed")) {
    if (stochastic) throw pdm::ConfigError("--seed is required for this command (or set \"seed\" in the config)");
    j["seed"] = 0;
  }
  return pdm::PipelineConfig::from_json(j);
}

void report(const pdm::StageOutcome& r) {
  if (r.skipped) {
    std::fprintf(stderr, "%-12s up to date\n", pdm::to_string(r.stage));
  } else {
    std::fprintf(stderr, "%-12s done in %.2f s\n", pdm::to_string(r.stage), r.seconds);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-based feature selection and alarm prediction for vehicle telemetry"};
  app.require_subcommand(1);
  Overrides o;

  struct StageCommand {
    pdm::Stage stage;
    bool stochastic;
    const char* help;
  };
  const StageCommand stage_commands[] = {
      {pdm::Stage::Ingest, false, "parse, type, clean, filter and impute the input table"},
      {pdm::Stage::Stats, false, "association matrices, target relevance, anomalies and alarm intervals"},
      {pdm::Stage::Graph, false, "build and export feature graphs"},
      {pdm::Stage::Communities, true, "dynamic-threshold community detection"},
      {pdm::Stage::Select, false, "SPEC / K-shell distinctive feature selection"},
      {pdm::Stage::Sample, true, "label shifting, interval undersampling, split and balancing"},
      {pdm::Stage::Train, true, "grid search, forest training, evaluation and importance"},
      {pdm::Stage::Explain, true, "local surrogate explanations of boundary test rows"},
  };
  std::optional<pdm::Stage> chosen_stage;
  bool chosen_stochastic = false;
  for (const auto& sc : stage_commands) {
    auto* sub = app.add_subcommand(pdm::to_string(sc.stage), sc.help);
    common_options(sub, o, sc.stochastic);
    switch (sc.stage) {
      case pdm::Stage::Ingest: ingest_options(sub, o); break;
      case pdm::Stage::Stats: stats_options(sub, o); break;
      case pdm::Stage::Graph: break;
      case pdm::Stage::Communities: community_options(sub, o); break;
      case pdm::Stage::Select: select_options(sub, o); break;
      case pdm::Stage::Sample: sample_options(sub, o); break;
      case pdm::Stage::Train: train_options(sub, o); break;
      case pdm::Stage::Explain: explain_options(sub, o); break;
    }
    sub->callback([&, sc] {
      chosen_stage = sc.stage;
      chosen_stochastic = sc.stochastic;
    });
  }

  auto* run = app.add_subcommand("run", "run every stage in order (resumes from up-to-date stages)");
  common_options(run, o, true);
  ingest_options(run, o);
  stats_options(run, o);
  community_options(run, o);
  select_options(run, o);
  sample_options(run, o);
  train_options(run, o);
  explain_options(run, o);

  auto* sim = app.add_subcommand("simdata", "generate synthetic telemetry with planted structure");
  std::string spec_path;
  std::string sim_output;
  std::string sim_manifest;
  std::optional<std::uint64_t> sim_seed;
  Json sim_overrides = Json::object();
  sim->add_option("--spec", spec_path, "JSON generator spec")->check(CLI::ExistingFile);
  sim->add_option("-o,--output", sim_output, "output CSV")->required();
  sim->add_option("--manifest", sim_manifest, "ground-truth manifest (default: <output>.manifest.json)");
  sim->add_option("-s,--seed", sim_seed, "random seed (required)");
  sim->add_option_function<std::size_t>("--rows", [&](std::size_t v) { sim_overrides["n_rows"] = v; }, "row count");
  sim->add_option_function<double>("--rho", [&](double v) { sim_overrides["rho"] = v; }, "within-cluster correlation");
  sim->add_option_function<std::vector<std::size_t>>(
         "--clusters",
         [&](const std::vector<std::size_t>& sizes) {
           Json list = Json::array();
           for (auto n : sizes) list.push_back({{"continuous", n}, {"categorical", 0}});
           sim_overrides["clusters"] = list;
         },
         "continuous features per cluster, e.g. 5,5")
      ->delimiter(',');
  sim->add_option_function<std::int64_t>("--lead", [&](std::int64_t v) { sim_overrides["alarm"]["lead"] = v; },
                                         "seconds from factor crossing to alarm onset");
  sim->add_option_function<double>("--missing-rate", [&](double v) { sim_overrides["missing_rate"] = v; },
                                   "share of missing feature cells");
  sim->add_option_function<double>("--stationary-fraction",
                                   [&](double v) { sim_overrides["stationary_fraction"] = v; },
                                   "share of rows with the vehicle at rest");

  auto* cmp = app.add_subcommand("compare", "spectral similarity and sweep summaries of two feature graphs");
  std::string graph_a;
  std::string graph_b;
  std::string cmp_output;
  cmp->add_option("graph_a", graph_a, "first graph (JSON)")->required();
  cmp->add_option("graph_b", graph_b, "second graph (JSON)")->required();
  cmp->add_option("--output", cmp_output, "write the report here instead of stdout");
  cmp->add_option("-c,--config", o.config_path, "JSON config file (thresholds, algorithms, seed)")
      ->check(CLI::ExistingFile);
  bind<std::uint64_t>(cmp, o, "-s,--seed", "seed", "random seed (required)");
  bind<std::size_t>(cmp, o, "-j,--jobs", "jobs", "max worker threads");
  community_options(cmp, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (chosen_stage) {
      auto config = load_config(o, chosen_stochastic);
      report(pdm::run_stage(config, *chosen_stage, o.force));
    } else if (run->parsed()) {
      auto config = load_config(o, true);
      for (auto stage : pdm::kStages) report(pdm::run_stage(config, stage, o.force));
      std::fprintf(stderr, "artifacts in %s\n", config.output_dir.string().c_str());
    } else if (sim->parsed()) {
      if (!sim_seed) throw pdm::ConfigError("--seed is required for simdata");
      Json spec_json = spec_path.empty() ? Json::object() : pdm::read_json(spec_path);
      merge(spec_json, sim_overrides);
      const auto spec = pdm::synthetic_spec_from_json(spec_json);
      const auto data = pdm::generate_synthetic(spec, *sim_seed);
      pdm::write_table(data.table, sim_output);
      Json manifest = pdm::to_json(data.manifest);
      manifest["seed"] = *sim_seed;
      manifest["spec"] = pdm::to_json(spec);
      pdm::write_json(manifest, sim_manifest.empty() ? sim_output + ".manifest.json" : sim_manifest);
    } else if (cmp->parsed()) {
      Json j = o.config_path.empty() ? Json::object() : pdm::read_json(o.config_path);
      merge(j, o.values);
      if (!j.contains("seed")) throw pdm::ConfigError("--seed is required for compare");
      if (!j.contains("targets")) j["targets"] = Json::array({"-"});
      const auto config = pdm::PipelineConfig::from_json(j);
      const auto result = pdm::compare_datasets(graph_a, graph_b, config.thresholds, config.algorithms, config.seed,
                                                config.jobs);
      Json out = pdm::to_json(result);
      out["graph_a"] = graph_a;
      out["graph_b"] = graph_b;
      if (cmp_output.empty()) {
        std::cout << out.dump(2) << "\n";
      } else {
        pdm::write_json(out, cmp_output);
      }
    }
  } catch (const pdm::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const pdm::DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 4;
  }
  return 0;
}
