#include "pdm/ingest.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>

#include "csv.hpp"
#include "pdm/error.hpp"
#include "pdm/spline.hpp"

namespace pdm {

const char* to_string(FeatureKind kind) noexcept {
  return kind == FeatureKind::Categorical ? "categorical" : "continuous";
}

const char* to_string(SkewDirection dir) noexcept {
  switch (dir) {
    case SkewDirection::Left: return "left";
    case SkewDirection::Right: return "right";
    case SkewDirection::Symmetric: return "symmetric";
  }
  return "symmetric";
}

std::size_t Column::missing_count() const {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), is_missing));
}

std::string Column::cell_text(std::size_t row) const {
  const double v = values[row];
  if (is_missing(v)) return {};
  if (type == ValueType::Text) return levels[static_cast<std::size_t>(v)];
  return csv::format_double(v);
}

std::optional<std::size_t> TimeTable::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return i;
  }
  return std::nullopt;
}

const Column& TimeTable::column(std::string_view name) const {
  auto idx = find(name);
  if (!idx) throw SchemaError("no column named '" + std::string(name) + "'");
  return columns[*idx];
}

Column& TimeTable::column(std::string_view name) {
  auto idx = find(name);
  if (!idx) throw SchemaError("no column named '" + std::string(name) + "'");
  return columns[*idx];
}

std::vector<std::string> TimeTable::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (const auto& c : columns) names.push_back(c.name);
  return names;
}

TimeTable TimeTable::select_rows(std::span<const std::size_t> rows) const {
  TimeTable out;
  out.timestamp_name = timestamp_name;
  out.timestamp_format = timestamp_format;
  out.timestamps.reserve(rows.size());
  for (auto r : rows) out.timestamps.push_back(timestamps[r]);
  out.columns.reserve(columns.size());
  for (const auto& c : columns) {
    Column nc{c.name, c.type, {}, c.levels};
    nc.values.reserve(rows.size());
    for (auto r : rows) nc.values.push_back(c.values[r]);
    out.columns.push_back(std::move(nc));
  }
  return out;
}

TimeTable TimeTable::select_columns(std::span<const std::string> names) const {
  TimeTable out;
  out.timestamp_name = timestamp_name;
  out.timestamp_format = timestamp_format;
  out.timestamps = timestamps;
  for (const auto& n : names) out.columns.push_back(column(n));
  return out;
}

bool operator==(const TimeTable& a, const TimeTable& b) {
  if (a.timestamp_name != b.timestamp_name || a.timestamps != b.timestamps ||
      a.columns.size() != b.columns.size()) {
    return false;
  }
  for (std::size_t c = 0; c < a.columns.size(); ++c) {
    const auto& x = a.columns[c];
    const auto& y = b.columns[c];
    if (x.name != y.name || x.type != y.type) return false;
    for (std::size_t r = 0; r < a.rows(); ++r) {
      if (x.cell_text(r) != y.cell_text(r)) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// timestamps

namespace {

// Howard Hinnant's days_from_civil.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

bool parse_digits(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return ec == std::errc() && ptr == s.data() + pos + len;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

bool is_missing_marker(std::string_view s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null" || s == "NULL";
}

std::optional<double> parse_number(std::string_view s) {
  double v = 0.0;
  const char* begin = s.data();
  if (!s.empty() && s.front() == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::optional<std::int64_t> parse_timestamp(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.size() >= 19 && text[4] == '-' && text[7] == '-' && (text[10] == 'T' || text[10] == ' ') &&
      text[13] == ':' && text[16] == ':') {
    if (text.size() > 20 || (text.size() == 20 && text[19] != 'Z')) return std::nullopt;
    int y, mo, d, h, mi, s;
    if (!parse_digits(text, 0, 4, y) || !parse_digits(text, 5, 2, mo) || !parse_digits(text, 8, 2, d) ||
        !parse_digits(text, 11, 2, h) || !parse_digits(text, 14, 2, mi) || !parse_digits(text, 17, 2, s)) {
      return std::nullopt;
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60) return std::nullopt;
    return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 + h * 3600 +
           mi * 60 + s;
  }
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::string format_iso8601(std::int64_t epoch_seconds) {
  std::int64_t days = epoch_seconds / 86400;
  std::int64_t secs = epoch_seconds % 86400;
  if (secs < 0) {
    secs += 86400;
    --days;
  }
  std::int64_t y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02uT%02lld:%02lld:%02lld", static_cast<long long>(y), m, d,
                static_cast<long long>(secs / 3600), static_cast<long long>((secs / 60) % 60),
                static_cast<long long>(secs % 60));
  return buf;
}

// ---------------------------------------------------------------------------
// CSV

TimeTable parse_table(std::istream& in, std::string_view timestamp_column) {
  std::vector<std::string> header;
  if (!csv::read_record(in, header) || header.empty() || (header.size() == 1 && header[0].empty())) {
    throw FormatError("missing header row");
  }
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);
  std::size_t ts_idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) == timestamp_column) {
      ts_idx = i;
      break;
    }
  }
  if (ts_idx == header.size()) {
    throw SchemaError("timestamp column '" + std::string(timestamp_column) + "' not in header");
  }

  std::vector<std::vector<std::string>> cells(header.size());
  std::vector<std::string> record;
  std::size_t line = 1;
  while (csv::read_record(in, record)) {
    ++line;
    if (record.size() == 1 && record[0].empty()) continue;
    if (record.size() != header.size()) {
      throw FormatError("line " + std::to_string(line) + ": expected " + std::to_string(header.size()) +
                        " fields, got " + std::to_string(record.size()));
    }
    for (std::size_t i = 0; i < record.size(); ++i) cells[i].push_back(std::move(record[i]));
  }
  const std::size_t n = cells[ts_idx].size();
  if (n == 0) throw EmptyInputError("no data rows");

  TimeTable table;
  table.timestamp_name = std::string(timestamp_column);
  std::vector<std::int64_t> ts(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto parsed = parse_timestamp(cells[ts_idx][r]);
    if (!parsed) {
      throw FormatError("data row " + std::to_string(r + 1) + ": unparseable timestamp '" + cells[ts_idx][r] + "'");
    }
    ts[r] = *parsed;
  }
  {
    const auto first = trim(cells[ts_idx][0]);
    table.timestamp_format =
        first.find('-', 1) != std::string_view::npos ? TimestampFormat::Iso8601 : TimestampFormat::EpochSeconds;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ts[a] < ts[b]; });
  table.timestamps.reserve(n);
  for (auto r : order) table.timestamps.push_back(ts[r]);

  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == ts_idx) continue;
    Column col;
    col.name = std::string(trim(header[c]));
    std::size_t numeric = 0, textual = 0;
    for (const auto& raw : cells[c]) {
      const auto s = trim(raw);
      if (is_missing_marker(s)) continue;
      (parse_number(s) ? numeric : textual)++;
    }
    col.type = (numeric > 0 && numeric >= textual) || (numeric == 0 && textual == 0) ? ValueType::Numeric
                                                                                     : ValueType::Text;
    col.values.reserve(n);
    std::unordered_map<std::string, std::size_t> level_index;
    for (auto r : order) {
      const auto s = trim(cells[c][r]);
      if (is_missing_marker(s)) {
        col.values.push_back(kMissing);
      } else if (col.type == ValueType::Numeric) {
        col.values.push_back(parse_number(s).value_or(kMissing));
      } else {
        auto [it, inserted] = level_index.try_emplace(std::string(s), col.levels.size());
        if (inserted) col.levels.emplace_back(s);
        col.values.push_back(static_cast<double>(it->second));
      }
    }
    table.columns.push_back(std::move(col));
  }
  return table;
}

TimeTable parse_table(const std::filesystem::path& path, std::string_view timestamp_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return parse_table(in, timestamp_column);
}

void write_table(const TimeTable& table, std::ostream& out) {
  std::vector<std::string> fields;
  fields.push_back(table.timestamp_name);
  for (const auto& c : table.columns) fields.push_back(c.name);
  csv::write_record(out, fields);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    fields.clear();
    fields.push_back(table.timestamp_format == TimestampFormat::Iso8601 ? format_iso8601(table.timestamps[r])
                                                                        : std::to_string(table.timestamps[r]));
    for (const auto& c : table.columns) fields.push_back(c.cell_text(r));
    csv::write_record(out, fields);
  }
}

void write_table(const TimeTable& table, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_table(table, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// typing and cleaning

namespace {

std::size_t distinct_count(const Column& col) {
  std::set<double> seen;
  for (double v : col.values) {
    if (!is_missing(v)) seen.insert(v);
  }
  return seen.size();
}

bool integer_like(const Column& col) {
  return std::all_of(col.values.begin(), col.values.end(),
                     [](double v) { return is_missing(v) || v == std::floor(v); });
}

const FeatureSpec& spec_for(const Schema& schema, const std::string& name) {
  auto it = schema.find(name);
  if (it == schema.end()) throw SchemaError("column '" + name + "' missing from schema");
  return it->second;
}

}  // namespace

Schema infer_feature_kinds(const TimeTable& table, std::size_t categorical_cap,
                           std::span<const std::string> targets) {
  Schema schema;
  for (const auto& col : table.columns) {
    if (col.missing_count() == col.values.size()) {
      throw UntypeableColumnError("column '" + col.name + "' has no values");
    }
    const std::size_t distinct = distinct_count(col);
    const bool is_target = std::find(targets.begin(), targets.end(), col.name) != targets.end();
    FeatureSpec spec;
    if (is_target) {
      spec = {FeatureKind::Categorical, distinct};
    } else if (col.type == ValueType::Text) {
      if (distinct >= categorical_cap) {
        throw UntypeableColumnError("text column '" + col.name + "' has " + std::to_string(distinct) +
                                    " distinct values (cap " + std::to_string(categorical_cap) + ")");
      }
      spec = {FeatureKind::Categorical, distinct};
    } else if (integer_like(col) && distinct < categorical_cap) {
      spec = {FeatureKind::Categorical, distinct};
    } else {
      spec = {FeatureKind::Continuous, 0};
    }
    schema.emplace(col.name, spec);
  }
  return schema;
}

bool matches_pattern(std::string_view name, std::string_view pattern) {
  return ::fnmatch(std::string(pattern).c_str(), std::string(name).c_str(), 0) == 0;
}

DropResult drop_uninformative(const TimeTable& table, const Schema& schema,
                              std::span<const std::string> protocol_patterns) {
  DropResult result;
  std::vector<std::string> keep;
  for (const auto& col : table.columns) {
    const auto& spec = spec_for(schema, col.name);
    std::string reason;
    if (std::any_of(protocol_patterns.begin(), protocol_patterns.end(),
                    [&](const std::string& p) { return matches_pattern(col.name, p); })) {
      reason = "protocol";
    } else if (spec.kind == FeatureKind::Continuous && distinct_count(col) <= 1) {
      reason = "zero variance";
    } else if (spec.kind == FeatureKind::Categorical && distinct_count(col) <= 1) {
      reason = "single value";
    }
    if (reason.empty()) {
      keep.push_back(col.name);
    } else {
      result.removed.push_back({col.name, reason});
    }
  }
  if (keep.empty()) throw DegenerateDatasetError("every column was removed");
  result.table = table.select_columns(keep);
  return result;
}

std::optional<Comparator> parse_comparator(std::string_view text) {
  if (text == "<=") return Comparator::LessEqual;
  if (text == "<") return Comparator::Less;
  if (text == ">=") return Comparator::GreaterEqual;
  if (text == ">") return Comparator::Greater;
  if (text == "==") return Comparator::Equal;
  return std::nullopt;
}

const char* to_string(Comparator op) noexcept {
  switch (op) {
    case Comparator::LessEqual: return "<=";
    case Comparator::Less: return "<";
    case Comparator::GreaterEqual: return ">=";
    case Comparator::Greater: return ">";
    case Comparator::Equal: return "==";
  }
  return "<=";
}

namespace {

bool holds(double v, Comparator op, double threshold) {
  if (is_missing(v)) return false;
  switch (op) {
    case Comparator::LessEqual: return v <= threshold;
    case Comparator::Less: return v < threshold;
    case Comparator::GreaterEqual: return v >= threshold;
    case Comparator::Greater: return v > threshold;
    case Comparator::Equal: return v == threshold;
  }
  return false;
}

}  // namespace

TimeTable filter_stationary(const TimeTable& table, const Schema& schema,
                            std::span<const StationaryClause> predicate) {
  std::vector<const Column*> cols;
  for (const auto& clause : predicate) {
    const Column& col = table.column(clause.column);
    if (spec_for(schema, clause.column).kind != FeatureKind::Continuous) {
      throw SchemaError("stationary predicate column '" + clause.column + "' is not continuous");
    }
    cols.push_back(&col);
  }
  std::vector<std::size_t> kept;
  kept.reserve(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    bool all = !predicate.empty();
    for (std::size_t i = 0; i < predicate.size() && all; ++i) {
      all = holds(cols[i]->values[r], predicate[i].op, predicate[i].threshold);
    }
    if (!all) kept.push_back(r);
  }
  return table.select_rows(kept);
}

TimeTable impute(const TimeTable& table, const Schema& schema) {
  TimeTable out = table;
  for (auto& col : out.columns) {
    const std::size_t missing = col.missing_count();
    if (missing == 0) continue;
    if (missing == col.values.size()) throw UntypeableColumnError("column '" + col.name + "' has no values");
    if (spec_for(schema, col.name).kind == FeatureKind::Categorical) {
      double last = kMissing;
      for (double v : col.values) {
        if (!is_missing(v)) {
          last = v;
          break;
        }
      }
      for (double& v : col.values) {
        if (is_missing(v)) {
          v = last;
        } else {
          last = v;
        }
      }
      continue;
    }
    // Knots at distinct timestamps; the first observation wins on ties.
    std::vector<double> kx, ky;
    for (std::size_t r = 0; r < col.values.size(); ++r) {
      if (is_missing(col.values[r])) continue;
      const auto t = static_cast<double>(out.timestamps[r]);
      if (!kx.empty() && kx.back() == t) continue;
      kx.push_back(t);
      ky.push_back(col.values[r]);
    }
    std::optional<NaturalCubicSpline> spline;
    if (kx.size() >= 4) spline.emplace(kx, ky);
    for (std::size_t r = 0; r < col.values.size(); ++r) {
      if (!is_missing(col.values[r])) continue;
      const auto t = static_cast<double>(out.timestamps[r]);
      col.values[r] = spline ? (*spline)(t) : interpolate_linear(kx, ky, t);
    }
  }
  return out;
}

ColumnSummary summarize(std::span<const double> values) {
  std::vector<double> v;
  v.reserve(values.size());
  for (double x : values) {
    if (!is_missing(x)) v.push_back(x);
  }
  ColumnSummary s;
  s.count = v.size();
  if (v.empty()) return s;
  const double n = static_cast<double>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    const double d = x - s.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  s.std = v.size() > 1 ? std::sqrt(m2 / (n - 1.0)) : 0.0;
  std::sort(v.begin(), v.end());
  s.min = v.front();
  s.max = v.back();
  const std::size_t mid = v.size() / 2;
  s.median = v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
  if (m2 > 0.0) {
    const double skew = (m3 / n) / std::pow(m2 / n, 1.5);
    s.skew_direction = skew <= -0.5 ? SkewDirection::Left : skew >= 0.5 ? SkewDirection::Right : SkewDirection::Symmetric;
  }
  return s;
}

}  // namespace pdm
