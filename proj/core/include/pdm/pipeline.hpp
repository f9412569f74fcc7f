#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pdm/community.hpp"
#include "pdm/evaluate.hpp"
#include "pdm/ingest.hpp"
#include "pdm/serialize.hpp"

namespace pdm {

struct SamplingConfig {
  std::int64_t horizon = 1200;
  std::size_t num_sample = 1;
  std::int64_t min_interval = 1;
  std::int64_t max_interval = 600;
  std::optional<std::size_t> target_size;  // default: twice the label-1 count (balanced classes)
  std::size_t k_neighbors = 5;
  std::size_t enn_n_neighbors = 3;
  double smote_ratio = 1.0;
  double train_fraction = 0.7;
  bool balance_before_split = false;
};

struct ModelConfig {
  ParamGrid grid{{5}, {3}, {50}, {8, 12}};
  std::size_t cv_folds = 5;
  std::size_t random_samples = 0;
  std::size_t min_leaf = 1;
  std::size_t importance_repeats = 10;
};

struct ExplainConfig {
  std::size_t instances = 10;
  std::size_t n_perturb = 1000;
  double kernel_width = 0.0;
  std::size_t top_k = 5;
};

struct PipelineConfig {
  std::filesystem::path input;
  std::string timestamp_column = "timestamp";
  std::vector<std::string> targets;
  std::size_t categorical_cap = 20;
  std::vector<std::string> protocol_patterns{"*Checksum*"};
  std::vector<StationaryClause> stationary;
  bool impute_before_filter = false;
  double zscore_threshold = 3.0;
  std::int64_t alarm_min_duration = 5;
  std::vector<double> thresholds = default_threshold_ladder();
  std::vector<Algorithm> algorithms{std::begin(kDefaultAlgorithms), std::end(kDefaultAlgorithms)};
  std::size_t features_per_community = 1;
  std::vector<std::string> exclusions;
  SamplingConfig sampling;
  ModelConfig model;
  ExplainConfig explain;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "pdm-out";
  std::size_t jobs = 1;  // never affects results

  /// Unknown keys, a missing seed or inconsistent values raise ConfigError.
  static PipelineConfig from_json(const Json& j);
  Json to_json() const;
};

enum class Stage { Ingest, Stats, Graph, Communities, Select, Sample, Train, Explain };

inline constexpr Stage kStages[] = {Stage::Ingest, Stage::Stats,  Stage::Graph, Stage::Communities,
                                    Stage::Select, Stage::Sample, Stage::Train, Stage::Explain};

const char* to_string(Stage s) noexcept;
std::optional<Stage> parse_stage(std::string_view text);

struct StageOutcome {
  Stage stage = Stage::Ingest;
  bool skipped = false;  // outputs were up to date
  double seconds = 0.0;
};

/// Runs one stage against the artifact directory. Each stage writes its
/// files plus <stage>/manifest.json (inputs hash, seed, content hash of
/// every output) and <stage>/timing.txt. A stage whose manifest matches its
/// current inputs and outputs is skipped unless `force` is set.
StageOutcome run_stage(const PipelineConfig& config, Stage stage, bool force = false);

/// All stages in order. Errors name the failing stage; earlier artifacts
/// stay on disk.
std::vector<StageOutcome> run_pipeline(const PipelineConfig& config, bool force = false);

struct SweepSummary {
  double threshold = 0.0;
  Algorithm algorithm = Algorithm::Leiden;
  std::optional<double> modularity;
  std::size_t n_communities = 0;
};

struct CompareReport {
  double spectral_distance = 0.0;
  SweepSummary a;
  SweepSummary b;
};

CompareReport compare_graphs(const FeatureGraph& a, const FeatureGraph& b, std::span<const double> thresholds,
                             std::span<const Algorithm> algorithms, std::uint64_t seed, std::size_t jobs = 1);

/// Reads two serialized FeatureGraphs (IoError when unreadable).
CompareReport compare_datasets(const std::filesystem::path& a, const std::filesystem::path& b,
                               std::span<const double> thresholds, std::span<const Algorithm> algorithms,
                               std::uint64_t seed, std::size_t jobs = 1);

Json to_json(const CompareReport& report);

}  // namespace pdm
