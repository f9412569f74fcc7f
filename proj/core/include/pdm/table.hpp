#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pdm {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) noexcept { return std::isnan(v); }

enum class ValueType { Numeric, Text };

enum class FeatureKind { Categorical, Continuous };

const char* to_string(FeatureKind kind) noexcept;

struct FeatureSpec {
  FeatureKind kind = FeatureKind::Continuous;
  std::size_t cardinality = 0;  // distinct non-missing values; meaningful for Categorical
  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

using Schema = std::map<std::string, FeatureSpec, std::less<>>;

/// One table column. Text cells are stored as codes into `levels`, so every
/// column is a vector of doubles with NaN marking a missing cell.
struct Column {
  std::string name;
  ValueType type = ValueType::Numeric;
  std::vector<double> values;
  std::vector<std::string> levels;

  bool missing(std::size_t row) const { return is_missing(values[row]); }
  std::size_t missing_count() const;
  /// Cell rendered the way it would appear in a CSV file ("" when missing).
  std::string cell_text(std::size_t row) const;
};

enum class TimestampFormat { Iso8601, EpochSeconds };

/// Timestamped telemetry. Timestamps are epoch seconds (UTC), sorted
/// non-decreasing; every column has exactly rows() cells.
class TimeTable {
 public:
  std::string timestamp_name = "timestamp";
  TimestampFormat timestamp_format = TimestampFormat::Iso8601;
  std::vector<std::int64_t> timestamps;
  std::vector<Column> columns;

  std::size_t rows() const noexcept { return timestamps.size(); }

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws SchemaError when absent.
  const Column& column(std::string_view name) const;
  Column& column(std::string_view name);

  std::vector<std::string> column_names() const;

  TimeTable select_rows(std::span<const std::size_t> rows) const;
  TimeTable select_columns(std::span<const std::string> names) const;

  /// Cell-wise comparison on rendered cell text, so two tables with
  /// different text-level orderings but identical content compare equal.
  friend bool operator==(const TimeTable& a, const TimeTable& b);
};

}  // namespace pdm
