#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pdm/table.hpp"

namespace pdm {

/// Parses "YYYY-MM-DDTHH:MM:SS" (optionally with a trailing 'Z') or an
/// integer epoch-seconds value.
std::optional<std::int64_t> parse_timestamp(std::string_view text);
std::string format_iso8601(std::int64_t epoch_seconds);

/// Reads a CSV with a header row. Rows are stably sorted by timestamp;
/// unparseable numeric cells become missing.
TimeTable parse_table(std::istream& in, std::string_view timestamp_column);
TimeTable parse_table(const std::filesystem::path& path, std::string_view timestamp_column);

void write_table(const TimeTable& table, std::ostream& out);
void write_table(const TimeTable& table, const std::filesystem::path& path);

/// Integer-like or textual columns with fewer than `categorical_cap`
/// distinct values are categorical; names in `targets` always are.
Schema infer_feature_kinds(const TimeTable& table, std::size_t categorical_cap = 20,
                           std::span<const std::string> targets = {});

/// Shell-style wildcard match ('*' and '?').
bool matches_pattern(std::string_view name, std::string_view pattern);

struct Removal {
  std::string column;
  std::string reason;  // "zero variance" | "single value" | "protocol"
  friend bool operator==(const Removal&, const Removal&) = default;
};

struct DropResult {
  TimeTable table;
  std::vector<Removal> removed;
};

DropResult drop_uninformative(const TimeTable& table, const Schema& schema,
                              std::span<const std::string> protocol_patterns);

enum class Comparator { LessEqual, Less, GreaterEqual, Greater, Equal };

std::optional<Comparator> parse_comparator(std::string_view text);
const char* to_string(Comparator op) noexcept;

struct StationaryClause {
  std::string column;
  Comparator op = Comparator::LessEqual;
  double threshold = 0.0;
};

/// Drops every row on which all clauses hold. Missing cells never satisfy
/// a clause.
TimeTable filter_stationary(const TimeTable& table, const Schema& schema,
                            std::span<const StationaryClause> predicate);

/// Continuous gaps: natural cubic spline over (timestamp, value) knots,
/// linear below four knots, constant with a single knot, clamped outside
/// the knot range. Categorical gaps: forward fill, head back-filled.
TimeTable impute(const TimeTable& table, const Schema& schema);

enum class SkewDirection { Left, Right, Symmetric };

struct ColumnSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (N-1)
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
  SkewDirection skew_direction = SkewDirection::Symmetric;
  std::size_t count = 0;  // non-missing cells
};

const char* to_string(SkewDirection dir) noexcept;

/// Summary over non-missing cells. |skewness| < 0.5 counts as symmetric.
ColumnSummary summarize(std::span<const double> values);

}  // namespace pdm
