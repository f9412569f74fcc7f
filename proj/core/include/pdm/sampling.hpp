#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pdm/matrix.hpp"
#include "pdm/table.hpp"

namespace pdm {

/// Model-ready rows. Categorical sources are one-hot encoded; `group[j]`
/// is -1 for a continuous column and the source index for a one-hot column.
struct LabeledDataset {
  Matrix X;
  std::vector<int> y;
  std::vector<std::int64_t> timestamps;
  std::vector<std::string> feature_names;
  std::vector<int> group;
  std::vector<std::string> sources;  // source column per group id

  std::size_t rows() const noexcept { return y.size(); }
  std::size_t count(int label) const;
  LabeledDataset select(std::span<const std::size_t> rows) const;
};

struct ClassCounts {
  std::size_t negative = 0;
  std::size_t positive = 0;
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

ClassCounts class_counts(std::span<const int> y);

/// Encodes `features` of `table` (all non-target columns when empty).
LabeledDataset encode_features(const TimeTable& table, const Schema& schema, std::span<const std::string> features);

/// y_t = 1 iff the target is active at some row with timestamp in
/// (t, t + horizon]. Rows whose window runs past the last timestamp are
/// dropped. X excludes the target.
LabeledDataset shift_labels(const TimeTable& table, const Schema& schema, const std::string& target,
                            std::int64_t horizon, std::span<const std::string> features = {});

/// Keeps every label-1 row and at most `num_sample` label-0 rows per
/// time bucket of width `interval` (anchored at the first timestamp),
/// drawn without replacement. Output sorted by timestamp.
LabeledDataset time_interval_undersample(const LabeledDataset& data, std::int64_t interval, std::size_t num_sample,
                                         std::uint64_t seed);

/// Row count time_interval_undersample would return.
std::size_t undersampled_size(const LabeledDataset& data, std::int64_t interval, std::size_t num_sample);

struct IntervalProbe {
  std::int64_t interval = 0;
  std::size_t size = 0;
};

struct IntervalSearch {
  std::int64_t interval = 0;
  bool infeasible = false;  // no interval reached target_size; interval = max
  std::vector<IntervalProbe> trace;
};

/// Binary search over integer intervals for the largest interval whose
/// undersampled size is still >= target_size. Sizes do not depend on the
/// draw, so `seed` only matters to callers that undersample afterwards.
IntervalSearch find_optimal_interval(const LabeledDataset& data, std::size_t target_size, std::int64_t min_interval,
                                     std::int64_t max_interval, std::size_t num_sample, std::uint64_t seed);

struct SyntheticOrigin {
  std::size_t base = 0;      // row index in the input
  std::size_t neighbor = 0;  // row index in the input
  double gap = 0.0;          // u in x + u (x_nn - x)
};

struct SmoteResult {
  Matrix X;  // input rows followed by synthetic rows
  std::vector<int> y;
  std::vector<SyntheticOrigin> origins;  // one per synthetic row
};

/// Oversamples the minority class until it reaches ceil(ratio * majority).
/// One-hot groups (from `group`, may be empty) are snapped to the nearest
/// vertex after interpolation.
SmoteResult smote(const Matrix& X, std::span<const int> y, std::size_t k_neighbors, double ratio,
                  std::uint64_t seed, std::span<const int> group = {});

struct EnnResult {
  Matrix X;
  std::vector<int> y;
  std::vector<std::size_t> removed;  // input row indices, ascending
};

/// Wilson editing, one pass: drop each point whose label differs from the
/// strict majority of its n nearest neighbours (ties by row index).
EnnResult enn(const Matrix& X, std::span<const int> y, std::size_t n_neighbors = 3);

struct SmoteEnnResult {
  Matrix X;
  std::vector<int> y;
  ClassCounts before;
  ClassCounts after_smote;
  ClassCounts after;
};

SmoteEnnResult smoteenn(const Matrix& X, std::span<const int> y, std::size_t k_neighbors,
                        std::size_t enn_n_neighbors, std::uint64_t seed, std::span<const int> group = {},
                        double ratio = 1.0);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per class: shuffle, put round(train_fraction * class size) rows in train.
/// Index lists come back sorted.
Split stratified_split(std::span<const int> y, double train_fraction, std::uint64_t seed);

/// Z-scores continuous columns with statistics of the data it was fit on.
/// Zero-variance columns are centred but not scaled. One-hot columns pass
/// through.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 1 where no scaling applies

  static Standardizer fit(const LabeledDataset& data);
  void apply(LabeledDataset& data) const;
  void apply(Matrix& X) const;
};

struct SamplingReport {
  ClassCounts original;
  ClassCounts undersampled;
  ClassCounts balanced;
  std::int64_t interval = 0;
  bool interval_infeasible = false;
  std::vector<IntervalProbe> trace;
};

}  // namespace pdm
