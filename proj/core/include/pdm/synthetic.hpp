#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pdm/table.hpp"

namespace pdm {

struct ClusterSpec {
  std::size_t continuous = 5;
  std::size_t categorical = 0;
};

struct AlarmRule {
  std::size_t driving_cluster = 0;
  double threshold = 0.5;  // on the latent regime scale: normal level 0, fault level 1
  std::int64_t lead = 60;  // seconds from factor crossing to alarm onset
};

struct SyntheticSpec {
  std::size_t n_rows = 20000;
  std::vector<ClusterSpec> clusters{ClusterSpec{}, ClusterSpec{}};
  double rho = 0.9;  // target within-cluster correlation
  AlarmRule alarm;
  double missing_rate = 0.0;
  double stationary_fraction = 0.0;
  std::size_t categorical_bins = 4;
  bool protocol_columns = true;  // add a checksum column and a constant column
  std::int64_t start = 1632960000;  // 2021-09-30T00:00:00Z
};

struct SyntheticManifest {
  std::string target = "alarm";
  std::vector<std::vector<std::string>> clusters;  // member names per cluster
  std::size_t driving_cluster = 0;
  std::vector<std::string> driving_features;
  double threshold = 0.0;
  std::int64_t lead = 0;
  std::vector<std::int64_t> crossings;  // timestamps where the driving factor rises above threshold
  std::vector<std::int64_t> onsets;     // alarm onset timestamps
  std::vector<std::string> stationary_columns;
};

struct SyntheticData {
  TimeTable table;
  SyntheticManifest manifest;
};

/// 1 Hz telemetry with planted feature clusters. Each cluster follows a
/// latent factor; members are sqrt(rho) * factor + sqrt(1 - rho) * noise,
/// categorical members bin a noisy member. The driving cluster's factor is
/// a two-regime AR(1) process and the alarm turns on exactly `lead`
/// seconds after it crosses the threshold. Members see every factor
/// standardized over the draw. Throws SpecError on an invalid
/// spec.
SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

void validate(const SyntheticSpec& spec);

}  // namespace pdm
