#include "pdm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "pdm/error.hpp"
#include "pdm/parallel.hpp"

namespace pdm {

const char* to_string(AssociationMethod m) noexcept {
  return m == AssociationMethod::Pearson ? "pearson" : "cramers_v";
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw SchemaError("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw InsufficientDataError("pearson needs at least 2 rows");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace {

template <typename PairFn>
AssociationMatrix build_matrix(AssociationMethod method, const TimeTable& table,
                               std::span<const std::string> columns, std::size_t jobs, PairFn&& pair) {
  AssociationMatrix out;
  out.method = method;
  out.names.assign(columns.begin(), columns.end());
  const std::size_t n = columns.size();
  out.values = Matrix(n, n);
  std::vector<const std::vector<double>*> data;
  for (const auto& name : columns) data.push_back(&table.column(name).values);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    out.values(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  }
  std::vector<double> results(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t k) {
    results[k] = pair(*data[pairs[k].first], *data[pairs[k].second]);
  });
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    out.values(pairs[k].first, pairs[k].second) = results[k];
    out.values(pairs[k].second, pairs[k].first) = results[k];
  }
  return out;
}

}  // namespace

AssociationMatrix pearson_matrix(const TimeTable& table, std::span<const std::string> columns, std::size_t jobs) {
  if (table.rows() < 2) throw InsufficientDataError("pearson matrix needs at least 2 rows");
  return build_matrix(AssociationMethod::Pearson, table, columns, jobs,
                      [](const std::vector<double>& a, const std::vector<double>& b) { return pearson(a, b); });
}

double cramers_v(const Matrix& contingency) {
  const std::size_t r = contingency.rows();
  const std::size_t k = contingency.cols();
  std::vector<double> row_sum(r, 0.0), col_sum(k, 0.0);
  double n = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double c = contingency(i, j);
      if (c < 0.0) throw DegenerateTableError("negative count");
      row_sum[i] += c;
      col_sum[j] += c;
      n += c;
    }
  }
  if (n <= 0.0) throw DegenerateTableError("empty contingency table");
  std::vector<std::size_t> rows, cols;
  for (std::size_t i = 0; i < r; ++i) {
    if (row_sum[i] > 0.0) rows.push_back(i);
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (col_sum[j] > 0.0) cols.push_back(j);
  }
  if (rows.size() < 2 || cols.size() < 2) {
    throw DegenerateTableError("fewer than 2 non-empty rows or columns");
  }
  double chi2 = 0.0;
  for (auto i : rows) {
    for (auto j : cols) {
      const double expected = row_sum[i] * col_sum[j] / n;
      const double d = contingency(i, j) - expected;
      chi2 += d * d / expected;
    }
  }
  const double dof = static_cast<double>(std::min(rows.size(), cols.size()) - 1);
  return std::clamp(std::sqrt(chi2 / n / dof), 0.0, 1.0);
}

Matrix contingency_table(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw SchemaError("contingency: length mismatch");
  std::set<double> av, bv;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (is_missing(a[i]) || is_missing(b[i])) continue;
    av.insert(a[i]);
    bv.insert(b[i]);
  }
  const std::vector<double> al(av.begin(), av.end()), bl(bv.begin(), bv.end());
  Matrix table(al.size(), bl.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (is_missing(a[i]) || is_missing(b[i])) continue;
    const auto r = static_cast<std::size_t>(std::lower_bound(al.begin(), al.end(), a[i]) - al.begin());
    const auto c = static_cast<std::size_t>(std::lower_bound(bl.begin(), bl.end(), b[i]) - bl.begin());
    table(r, c) += 1.0;
  }
  return table;
}

AssociationMatrix cramers_v_matrix(const TimeTable& table, std::span<const std::string> columns, std::size_t jobs) {
  return build_matrix(AssociationMethod::CramersV, table, columns, jobs,
                      [](const std::vector<double>& a, const std::vector<double>& b) {
                        return cramers_v(contingency_table(a, b));
                      });
}

double anova_f(std::span<const double> values, std::span<const double> groups, double f_max) {
  if (values.size() != groups.size()) throw SchemaError("anova: length mismatch");
  std::map<double, std::pair<double, std::size_t>> stats;  // group -> (sum, count)
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (is_missing(values[i]) || is_missing(groups[i])) continue;
    auto& g = stats[groups[i]];
    g.first += values[i];
    ++g.second;
    total += values[i];
    ++n;
  }
  const std::size_t g = stats.size();
  if (g < 2) throw UndefinedFError("fewer than 2 groups");
  if (n <= g) throw UndefinedFError("observations must exceed the number of groups");
  const double grand = total / static_cast<double>(n);
  double ssb = 0.0;
  for (const auto& [key, s] : stats) {
    const double mean = s.first / static_cast<double>(s.second);
    ssb += static_cast<double>(s.second) * (mean - grand) * (mean - grand);
  }
  double ssw = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (is_missing(values[i]) || is_missing(groups[i])) continue;
    const auto& s = stats[groups[i]];
    const double d = values[i] - s.first / static_cast<double>(s.second);
    ssw += d * d;
  }
  const double msb = ssb / static_cast<double>(g - 1);
  const double msw = ssw / static_cast<double>(n - g);
  // Relative floor so rounding residue in a truly constant group reads as 0.
  const double scale = std::max(1.0, grand * grand);
  if (msw <= 1e-24 * scale) return msb <= 1e-24 * scale ? 0.0 : f_max;
  return std::min(msb / msw, f_max);
}

double anova_f_categorical(std::span<const double> codes, std::span<const double> groups, double f_max) {
  std::set<double> levels;
  for (double c : codes) {
    if (!is_missing(c)) levels.insert(c);
  }
  double best = 0.0;
  std::vector<double> indicator(codes.size());
  for (double level : levels) {
    for (std::size_t i = 0; i < codes.size(); ++i) {
      indicator[i] = is_missing(codes[i]) ? kMissing : (codes[i] == level ? 1.0 : 0.0);
    }
    best = std::max(best, anova_f(indicator, groups, f_max));
  }
  return best;
}

TargetRelevance target_relevance(const TimeTable& table, const Schema& schema, const std::string& target,
                                 std::span<const std::string> features, double f_max) {
  TargetRelevance rel;
  rel.target = target;
  const auto& groups = table.column(target).values;
  for (const auto& name : features) {
    auto it = schema.find(name);
    if (it == schema.end()) throw SchemaError("column '" + name + "' missing from schema");
    const auto& values = table.column(name).values;
    rel.scores[name] = it->second.kind == FeatureKind::Categorical ? anova_f_categorical(values, groups, f_max)
                                                                   : anova_f(values, groups, f_max);
  }
  return rel;
}

IntervalSet zscore_anomalies(std::span<const std::int64_t> timestamps, std::span<const double> values,
                             double threshold) {
  if (timestamps.size() != values.size()) throw SchemaError("zscore: length mismatch");
  IntervalSet out;
  const std::size_t n = values.size();
  if (n == 0) return out;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (sd == 0.0) return out;
  bool open = false;
  for (std::size_t i = 0; i < n; ++i) {
    const bool flagged = std::abs((values[i] - mean) / sd) > threshold;
    if (flagged && !open) {
      out.push_back({timestamps[i], timestamps[i], "anomaly"});
      open = true;
    } else if (flagged) {
      out.back().end = timestamps[i];
    } else {
      open = false;
    }
  }
  return out;
}

IntervalSet alarm_active_intervals(const TimeTable& table, const std::string& target, std::int64_t min_duration) {
  const auto& values = table.column(target).values;
  std::set<double> bad;
  for (double v : values) {
    if (is_missing(v) || (v != 0.0 && v != 1.0)) bad.insert(v);
  }
  if (!bad.empty()) {
    std::string list;
    for (double v : bad) {
      if (!list.empty()) list += ", ";
      list += is_missing(v) ? "missing" : std::to_string(v);
    }
    throw EncodingError("target '" + target + "' is not binary: " + list);
  }
  IntervalSet out;
  std::size_t r = 0;
  const std::size_t n = values.size();
  while (r < n) {
    if (values[r] == 0.0) {
      ++r;
      continue;
    }
    std::size_t end = r;
    while (end + 1 < n && values[end + 1] != 0.0) ++end;
    if (table.timestamps[end] - table.timestamps[r] >= min_duration) {
      out.push_back({table.timestamps[r], table.timestamps[end], "alarm"});
    }
    r = end + 1;
  }
  return out;
}

std::vector<OverlapEntry> anomaly_overlap_report(const IntervalSet& alarms,
                                                 const std::map<std::string, IntervalSet>& anomalies) {
  std::vector<OverlapEntry> report;
  for (const auto& alarm : alarms) {
    const std::int64_t length = alarm.end - alarm.start;
    for (const auto& [column, set] : anomalies) {
      std::int64_t overlap = 0;
      bool touches = false;
      for (const auto& a : set) {
        const std::int64_t lo = std::max(alarm.start, a.start);
        const std::int64_t hi = std::min(alarm.end, a.end);
        if (hi >= lo) {
          overlap += hi - lo;
          touches = true;
        }
      }
      double fraction = 0.0;
      if (length > 0) {
        fraction = static_cast<double>(overlap) / static_cast<double>(length);
      } else if (touches) {
        fraction = 1.0;  // instantaneous alarm inside an anomaly
      }
      report.push_back({alarm, column, overlap, fraction});
    }
  }
  std::stable_sort(report.begin(), report.end(), [](const OverlapEntry& a, const OverlapEntry& b) {
    if (a.fraction != b.fraction) return a.fraction > b.fraction;
    if (a.alarm.start != b.alarm.start) return a.alarm.start < b.alarm.start;
    return a.column < b.column;
  });
  return report;
}

}  // namespace pdm
