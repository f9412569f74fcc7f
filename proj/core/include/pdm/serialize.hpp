#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "pdm/community.hpp"
#include "pdm/evaluate.hpp"
#include "pdm/forest.hpp"
#include "pdm/graph.hpp"
#include "pdm/ingest.hpp"
#include "pdm/scoring.hpp"
#include "pdm/sampling.hpp"
#include "pdm/stats.hpp"
#include "pdm/synthetic.hpp"

namespace pdm {

using Json = nlohmann::ordered_json;

Json to_json(const AssociationMatrix& m);
AssociationMatrix association_from_json(const Json& j);

Json to_json(const IntervalSet& intervals);
Json to_json(const TargetRelevance& rel);
TargetRelevance relevance_from_json(const Json& j);
Json to_json(const Schema& schema);
Schema schema_from_json(const Json& j);
Json to_json(const std::vector<Removal>& removals);

Json to_json(const FeatureGraph& graph);
FeatureGraph graph_from_json(const Json& j);

Json to_json(const FeatureGraph& graph, const CommunityPartition& p);
Json to_json(const FeatureGraph& graph, const SweepResult& sweep);
SweepResult sweep_from_json(const FeatureGraph& graph, const Json& j);

Json to_json(const SelectedFeatureSet& set);
SelectedFeatureSet selection_from_json(const Json& j);

Json to_json(const std::map<std::string, ColumnSummary>& summaries);
Json to_json(const std::vector<OverlapEntry>& report);

Json to_json(const SamplingReport& report);
Json to_json(const Standardizer& s);
Standardizer standardizer_from_json(const Json& j);

/// Versioned tree dump.
Json to_json(const ForestModel& model);
ForestModel forest_from_json(const Json& j);

Json to_json(const ForestParams& p);
Json to_json(const EvalReport& report);
Json to_json(const GridPoint& p);
Json to_json(const std::vector<Importance>& ranking);
Json to_json(const Explanation& e);

Json to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const Json& j);
Json to_json(const SyntheticManifest& m);
SyntheticManifest synthetic_manifest_from_json(const Json& j);

/// LabeledDataset as features CSV + labels CSV (timestamp,label) + JSON
/// sidecar holding names, one-hot groups and anything in `extra`.
void write_dataset(const LabeledDataset& data, const std::filesystem::path& stem, const Json& extra = Json::object());
LabeledDataset read_dataset(const std::filesystem::path& stem);

/// Writes `j` with 2-space indentation and a trailing newline.
void write_json(const Json& j, const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

void write_text(const std::string& text, const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

}  // namespace pdm
