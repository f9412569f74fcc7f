#include "pdm/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "pdm/error.hpp"
#include "pdm/rng.hpp"

namespace pdm {

std::size_t LabeledDataset::count(int label) const {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), label));
}

LabeledDataset LabeledDataset::select(std::span<const std::size_t> rows) const {
  LabeledDataset out;
  out.X = X.select_rows(rows);
  out.feature_names = feature_names;
  out.group = group;
  out.sources = sources;
  for (auto r : rows) {
    out.y.push_back(y[r]);
    out.timestamps.push_back(timestamps[r]);
  }
  if (rows.empty()) out.X = Matrix(0, feature_names.size());
  return out;
}

ClassCounts class_counts(std::span<const int> y) {
  ClassCounts c;
  for (int v : y) (v == 1 ? c.positive : c.negative)++;
  return c;
}

LabeledDataset encode_features(const TimeTable& table, const Schema& schema, std::span<const std::string> features) {
  LabeledDataset out;
  struct Plan {
    const Column* column;
    std::vector<double> levels;  // empty for continuous
  };
  std::vector<Plan> plan;
  for (const auto& name : features) {
    const Column& col = table.column(name);
    auto it = schema.find(name);
    if (it == schema.end()) throw SchemaError("column '" + name + "' missing from schema");
    if (col.missing_count() > 0) throw SchemaError("column '" + name + "' has missing cells; impute first");
    if (it->second.kind == FeatureKind::Continuous) {
      out.feature_names.push_back(name);
      out.group.push_back(-1);
      plan.push_back({&col, {}});
    } else {
      std::set<double> levels(col.values.begin(), col.values.end());
      const int gid = static_cast<int>(out.sources.size());
      out.sources.push_back(name);
      Plan p{&col, {levels.begin(), levels.end()}};
      for (double level : p.levels) {
        const std::string text = col.type == ValueType::Text ? col.levels[static_cast<std::size_t>(level)]
                                                             : Column{"", ValueType::Numeric, {level}, {}}.cell_text(0);
        out.feature_names.push_back(name + "=" + text);
        out.group.push_back(gid);
      }
      plan.push_back(std::move(p));
    }
  }
  out.X = Matrix(table.rows(), out.feature_names.size());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    std::size_t c = 0;
    for (const auto& p : plan) {
      const double v = p.column->values[r];
      if (p.levels.empty()) {
        out.X(r, c++) = v;
      } else {
        for (double level : p.levels) out.X(r, c++) = v == level ? 1.0 : 0.0;
      }
    }
  }
  out.timestamps = table.timestamps;
  out.y.assign(table.rows(), 0);
  return out;
}

LabeledDataset shift_labels(const TimeTable& table, const Schema& schema, const std::string& target,
                            std::int64_t horizon, std::span<const std::string> features) {
  const auto& alarm = table.column(target).values;
  for (double v : alarm) {
    if (v != 0.0 && v != 1.0) throw EncodingError("target '" + target + "' is not coded 0/1");
  }
  if (table.rows() == 0 || horizon >= table.timestamps.back() - table.timestamps.front()) {
    throw EmptyDatasetError("horizon covers the whole data span");
  }
  std::vector<std::string> names;
  if (features.empty()) {
    for (const auto& c : table.columns) {
      if (c.name != target) names.push_back(c.name);
    }
  } else {
    for (const auto& f : features) {
      if (f == target) throw SchemaError("target '" + target + "' cannot be a feature");
      names.push_back(f);
    }
  }
  LabeledDataset all = encode_features(table, schema, names);

  const std::size_t n = table.rows();
  const auto& ts = table.timestamps;
  // next_active[r]: earliest active timestamp strictly after ts[r].
  std::vector<std::int64_t> next_active(n, INT64_MAX);
  std::int64_t upcoming = INT64_MAX;
  std::size_t r = n;
  while (r > 0) {
    // Walk one block of equal timestamps at a time.
    std::size_t begin = r - 1;
    while (begin > 0 && ts[begin - 1] == ts[r - 1]) --begin;
    for (std::size_t i = begin; i < r; ++i) next_active[i] = upcoming;
    for (std::size_t i = begin; i < r; ++i) {
      if (alarm[i] != 0.0) upcoming = ts[i];
    }
    r = begin;
  }
  const std::int64_t last = ts.back();
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (ts[i] + horizon > last) continue;
    all.y[i] = next_active[i] <= ts[i] + horizon ? 1 : 0;
    kept.push_back(i);
  }
  if (kept.empty()) throw EmptyDatasetError("no rows left after label shifting");
  return all.select(kept);
}

namespace {

std::map<std::int64_t, std::vector<std::size_t>> negative_buckets(const LabeledDataset& data, std::int64_t interval) {
  std::map<std::int64_t, std::vector<std::size_t>> buckets;
  if (data.rows() == 0) return buckets;
  const std::int64_t anchor = *std::min_element(data.timestamps.begin(), data.timestamps.end());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    if (data.y[r] == 1) continue;
    buckets[(data.timestamps[r] - anchor) / interval].push_back(r);
  }
  return buckets;
}

}  // namespace

std::size_t undersampled_size(const LabeledDataset& data, std::int64_t interval, std::size_t num_sample) {
  if (interval <= 0) throw InvalidRangeError("interval must be positive");
  std::size_t size = data.count(1);
  for (const auto& [id, rows] : negative_buckets(data, interval)) size += std::min(rows.size(), num_sample);
  return size;
}

LabeledDataset time_interval_undersample(const LabeledDataset& data, std::int64_t interval, std::size_t num_sample,
                                         std::uint64_t seed) {
  if (interval <= 0) throw InvalidRangeError("interval must be positive");
  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    if (data.y[r] == 1) kept.push_back(r);
  }
  for (const auto& [id, rows] : negative_buckets(data, interval)) {
    if (rows.size() <= num_sample) {
      kept.insert(kept.end(), rows.begin(), rows.end());
      continue;
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(id)));
    for (auto pick : rng.sample_without_replacement(rows.size(), num_sample)) kept.push_back(rows[pick]);
  }
  std::sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(data.timestamps[a], a) < std::tie(data.timestamps[b], b);
  });
  return data.select(kept);
}

IntervalSearch find_optimal_interval(const LabeledDataset& data, std::size_t target_size, std::int64_t min_interval,
                                     std::int64_t max_interval, std::size_t num_sample,
                                     [[maybe_unused]] std::uint64_t seed) {
  if (min_interval > max_interval) throw InvalidRangeError("min_interval exceeds max_interval");
  if (min_interval <= 0) throw InvalidRangeError("intervals must be positive");
  IntervalSearch search;
  search.interval = max_interval;
  search.infeasible = true;
  std::int64_t left = min_interval;
  std::int64_t right = max_interval;
  while (left <= right) {
    const std::int64_t mid = left + (right - left) / 2;
    const std::size_t size = undersampled_size(data, mid, num_sample);
    search.trace.push_back({mid, size});
    if (size >= target_size) {
      search.interval = mid;
      search.infeasible = false;
      left = mid + 1;
    } else {
      right = mid - 1;
    }
  }
  return search;
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

/// Indices of the k nearest rows of `pool` to pool[self] (self excluded),
/// ordered by (distance, index).
std::vector<std::size_t> nearest(const Matrix& X, std::span<const std::size_t> pool, std::size_t self,
                                 std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(pool.size());
  for (auto j : pool) {
    if (j == self) continue;
    d.emplace_back(squared_distance(X.row(self), X.row(j)), j);
  }
  k = std::min(k, d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = d[i].second;
  return out;
}

}  // namespace

SmoteResult smote(const Matrix& X, std::span<const int> y, std::size_t k_neighbors, double ratio,
                  std::uint64_t seed, std::span<const int> group) {
  if (X.rows() != y.size()) throw SchemaError("smote: X and y differ in length");
  if (k_neighbors == 0) throw ValidationError("k_neighbors must be positive");
  const auto counts = class_counts(y);
  const int minority = counts.positive <= counts.negative ? 1 : 0;
  const std::size_t n_min = minority == 1 ? counts.positive : counts.negative;
  const std::size_t n_maj = minority == 1 ? counts.negative : counts.positive;
  if (n_min <= k_neighbors) {
    throw InsufficientMinorityError("minority class has " + std::to_string(n_min) + " rows, need more than " +
                                    std::to_string(k_neighbors));
  }
  SmoteResult out{X, {y.begin(), y.end()}, {}};
  const auto target = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n_maj) - 1e-9));
  if (target <= n_min) return out;

  std::vector<std::size_t> pool;
  for (std::size_t r = 0; r < y.size(); ++r) {
    if (y[r] == minority) pool.push_back(r);
  }
  std::vector<std::vector<std::size_t>> neighbors(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) neighbors[i] = nearest(X, pool, pool[i], k_neighbors);

  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t c = 0; c < group.size(); ++c) {
    if (group[c] >= 0) groups[group[c]].push_back(c);
  }

  Rng rng(seed);
  std::vector<double> point(X.cols());
  for (std::size_t s = n_min; s < target; ++s) {
    const std::size_t i = rng.index(pool.size());
    const std::size_t base = pool[i];
    const std::size_t nb = neighbors[i][rng.index(neighbors[i].size())];
    const double gap = rng.uniform();
    for (std::size_t c = 0; c < X.cols(); ++c) point[c] = X(base, c) + gap * (X(nb, c) - X(base, c));
    for (const auto& [gid, cols] : groups) {
      std::size_t best = cols.front();
      for (auto c : cols) {
        if (point[c] > point[best]) best = c;
      }
      for (auto c : cols) point[c] = c == best ? 1.0 : 0.0;
    }
    out.X.append_row(point);
    out.y.push_back(minority);
    out.origins.push_back({base, nb, gap});
  }
  return out;
}

EnnResult enn(const Matrix& X, std::span<const int> y, std::size_t n_neighbors) {
  if (X.rows() != y.size()) throw SchemaError("enn: X and y differ in length");
  if (X.rows() <= n_neighbors) throw InsufficientDataError("enn needs more rows than neighbours");
  std::vector<std::size_t> all(X.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  EnnResult out;
  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < X.rows(); ++r) {
    std::size_t disagree = 0;
    for (auto j : nearest(X, all, r, n_neighbors)) disagree += y[j] != y[r];
    if (2 * disagree > n_neighbors) {
      out.removed.push_back(r);
    } else {
      kept.push_back(r);
    }
  }
  out.X = X.select_rows(kept);
  if (kept.empty()) out.X = Matrix(0, X.cols());
  for (auto r : kept) out.y.push_back(y[r]);
  const auto counts = class_counts(out.y);
  const auto before = class_counts(y);
  if ((before.positive > 0 && counts.positive == 0) || (before.negative > 0 && counts.negative == 0)) {
    throw DegenerateClassError("editing removed an entire class");
  }
  return out;
}

SmoteEnnResult smoteenn(const Matrix& X, std::span<const int> y, std::size_t k_neighbors,
                        std::size_t enn_n_neighbors, std::uint64_t seed, std::span<const int> group, double ratio) {
  SmoteEnnResult out;
  out.before = class_counts(y);
  if (out.before.positive == 0 || out.before.negative == 0) {
    throw InsufficientMinorityError("both classes must be present");
  }
  auto over = smote(X, y, k_neighbors, ratio, seed, group);
  out.after_smote = class_counts(over.y);
  auto edited = enn(over.X, over.y, enn_n_neighbors);
  out.X = std::move(edited.X);
  out.y = std::move(edited.y);
  out.after = class_counts(out.y);
  return out;
}

Split stratified_split(std::span<const int> y, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ValidationError("train fraction must be in (0, 1)");
  std::map<int, std::vector<std::size_t>> classes;
  for (std::size_t r = 0; r < y.size(); ++r) classes[y[r]].push_back(r);
  Split split;
  for (auto& [label, rows] : classes) {
    if (rows.size() < 2) {
      throw StratificationError("class " + std::to_string(label) + " has only " + std::to_string(rows.size()) +
                                " member");
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(label)));
    rng.shuffle(rows);
    const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(rows.size())));
    split.train.insert(split.train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.insert(split.test.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Standardizer Standardizer::fit(const LabeledDataset& data) {
  Standardizer s;
  const std::size_t d = data.X.cols();
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  const std::size_t n = data.rows();
  if (n == 0) return s;
  for (std::size_t c = 0; c < d; ++c) {
    if (data.group[c] >= 0) continue;
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) sum += data.X(r, c);
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) ss += (data.X(r, c) - mean) * (data.X(r, c) - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    s.mean[c] = mean;
    s.scale[c] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

void Standardizer::apply(Matrix& X) const {
  for (std::size_t r = 0; r < X.rows(); ++r)
    for (std::size_t c = 0; c < X.cols(); ++c) X(r, c) = (X(r, c) - mean[c]) / scale[c];
}

void Standardizer::apply(LabeledDataset& data) const { apply(data.X); }

}  // namespace pdm
