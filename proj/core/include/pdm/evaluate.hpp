#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pdm/forest.hpp"
#include "pdm/sampling.hpp"

namespace pdm {

struct Confusion {
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tp = 0;
  std::size_t total() const noexcept { return tn + fp + fn + tp; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

Confusion confusion_matrix(std::span<const int> truth, std::span<const int> predicted);

/// Metrics from a confusion matrix. Ratios with a zero denominator are
/// reported as 0 and flagged.
struct EvalReport {
  Confusion confusion;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
  std::uint64_t seed = 0;
  ForestParams params;
};

EvalReport metrics_from_confusion(const Confusion& c);

EvalReport evaluate(const ForestModel& model, const Matrix& X, std::span<const int> y);
EvalReport evaluate(const ForestModel& model, const LabeledDataset& test);

struct GridPoint {
  std::size_t k_neighbors = 5;
  std::size_t enn_n_neighbors = 3;
  std::size_t n_trees = 100;
  std::size_t max_depth = 10;
  friend bool operator==(const GridPoint&, const GridPoint&) = default;
};

struct ParamGrid {
  std::vector<std::size_t> k_neighbors{5};
  std::vector<std::size_t> enn_n_neighbors{3};
  std::vector<std::size_t> n_trees{100};
  std::vector<std::size_t> max_depth{10};

  /// Cartesian product; the last axis varies fastest.
  std::vector<GridPoint> points() const;
};

struct GridSearchOptions {
  std::size_t folds = 5;
  std::size_t random_samples = 0;  // 0 = exhaustive, else sample this many points without replacement
  std::size_t min_leaf = 1;
  bool balance = true;  // apply SMOTEENN to each fold's training part
  double smote_ratio = 1.0;
  std::size_t jobs = 1;
};

struct CvRow {
  GridPoint point;
  std::vector<double> fold_f1;
  double mean_f1 = 0.0;
};

struct GridSearchResult {
  GridPoint best;
  std::size_t best_row = 0;
  std::vector<CvRow> table;  // in grid order
};

/// Per class: shuffle, then deal rows round-robin into k folds. Returns
/// the held-out row indices of each fold, sorted.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> y, std::size_t k, std::uint64_t seed);

/// Stratified k-fold CV over the grid; the point with the highest mean F1
/// wins, ties to the earlier grid point.
GridSearchResult grid_search(const LabeledDataset& train, const ParamGrid& grid, const GridSearchOptions& options,
                             std::uint64_t seed);

struct Importance {
  std::string feature;
  double mean_drop = 0.0;
};

/// Per source feature (one-hot groups are permuted together): shuffle its
/// test column, re-score, average the F1 drop over repeats. Sorted by drop
/// descending, then name.
std::vector<Importance> permutation_importance(const ForestModel& model, const LabeledDataset& test,
                                               std::size_t n_repeats, std::uint64_t seed, std::size_t jobs = 1);

struct FeatureWeight {
  std::string feature;
  double weight = 0.0;
};

struct Explanation {
  std::size_t instance = 0;
  std::vector<FeatureWeight> weights;  // |weight| descending, then name
  double intercept = 0.0;
  double r2 = 0.0;
  bool r2_undefined = false;
  bool ridge_fallback = false;
};

struct LimeOptions {
  std::size_t n_perturb = 1000;
  double kernel_width = 0.0;  // 0 = 0.75 * sqrt(d)
  std::size_t top_k = 0;      // 0 = all features
};

/// Local linear surrogate of the forest's vote fraction around
/// data.X.row(instance). `train` supplies the perturbation scales and the
/// one-hot marginals.
Explanation lime_explain(const ForestModel& model, const LabeledDataset& train, const LabeledDataset& data,
                         std::size_t instance, const LimeOptions& options, std::uint64_t seed);

}  // namespace pdm
