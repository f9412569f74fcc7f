#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pdm/matrix.hpp"
#include "pdm/table.hpp"

namespace pdm {

enum class AssociationMethod { Pearson, CramersV };

const char* to_string(AssociationMethod m) noexcept;

/// Symmetric pairwise association matrix over named features.
struct AssociationMatrix {
  AssociationMethod method = AssociationMethod::Pearson;
  std::vector<std::string> names;
  Matrix values;
};

/// Sample Pearson correlation. A constant input yields 0.
double pearson(std::span<const double> x, std::span<const double> y);

AssociationMatrix pearson_matrix(const TimeTable& table, std::span<const std::string> columns,
                                 std::size_t jobs = 1);

/// Cramér's V of an r x k count table. Zero-margin rows/columns are dropped
/// before the chi-square statistic is formed.
double cramers_v(const Matrix& contingency);

/// Count table of two coded categorical columns (rows: distinct values of
/// `a` ascending, columns: distinct values of `b` ascending).
Matrix contingency_table(std::span<const double> a, std::span<const double> b);

AssociationMatrix cramers_v_matrix(const TimeTable& table, std::span<const std::string> columns,
                                   std::size_t jobs = 1);

inline constexpr double kFMax = 1e12;

/// One-way ANOVA F of `values` grouped by `groups`. Missing values are
/// skipped. Zero within-group variance caps the score at f_max.
double anova_f(std::span<const double> values, std::span<const double> groups, double f_max = kFMax);

/// Categorical feature: maximum F over the one-hot indicator columns.
double anova_f_categorical(std::span<const double> codes, std::span<const double> groups,
                           double f_max = kFMax);

/// Feature relevance against one target alarm (node weights of the graph).
struct TargetRelevance {
  std::string target;
  std::map<std::string, double> scores;
};

TargetRelevance target_relevance(const TimeTable& table, const Schema& schema, const std::string& target,
                                 std::span<const std::string> features, double f_max = kFMax);

struct Interval {
  std::int64_t start = 0;
  std::int64_t end = 0;
  std::string label;
  friend bool operator==(const Interval&, const Interval&) = default;
};

using IntervalSet = std::vector<Interval>;

/// Runs of consecutive rows with |z| > threshold (population statistics).
IntervalSet zscore_anomalies(std::span<const std::int64_t> timestamps, std::span<const double> values,
                             double threshold = 3.0);

/// Maximal runs of nonzero target rows with end - start >= min_duration.
/// The target must be binary coded (0 inactive, 1 active).
IntervalSet alarm_active_intervals(const TimeTable& table, const std::string& target,
                                   std::int64_t min_duration = 5);

struct OverlapEntry {
  Interval alarm;
  std::string column;
  std::int64_t overlap_seconds = 0;
  double fraction = 0.0;
};

/// Every (alarm interval, column) pair, sorted by overlap fraction
/// descending, then alarm start, then column name.
std::vector<OverlapEntry> anomaly_overlap_report(const IntervalSet& alarms,
                                                 const std::map<std::string, IntervalSet>& anomalies);

}  // namespace pdm
