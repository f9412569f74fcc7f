#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "pdm/error.hpp"
#include "pdm/sampling.hpp"
#include "support.hpp"

using namespace pdm;

namespace {

TimeTable alarm_table(const std::vector<std::int64_t>& ts, const std::vector<double>& alarm) {
  TimeTable t;
  t.timestamps = ts;
  Column x{"x", ValueType::Numeric, {}, {}};
  for (std::size_t i = 0; i < ts.size(); ++i) x.values.push_back(static_cast<double>(i));
  t.columns = {x, {"alarm", ValueType::Numeric, alarm, {}}};
  return t;
}

const Schema kAlarmSchema{{"x", {FeatureKind::Continuous, 0}}, {"alarm", {FeatureKind::Categorical, 2}}};

LabeledDataset labeled(const std::vector<std::int64_t>& ts, const std::vector<int>& y) {
  LabeledDataset d;
  d.timestamps = ts;
  d.y = y;
  d.feature_names = {"x"};
  d.group = {-1};
  for (std::size_t i = 0; i < ts.size(); ++i) d.X.append_row(std::vector<double>{static_cast<double>(i)});
  return d;
}

// Linear scan over every integer interval; same tie rule as the search:
// the largest qualifying interval, else max_interval flagged infeasible.
std::pair<std::int64_t, bool> linear_scan(const LabeledDataset& d, std::size_t target, std::int64_t lo,
                                          std::int64_t hi, std::size_t num_sample, std::uint64_t seed) {
  std::int64_t best = hi;
  bool infeasible = true;
  for (std::int64_t i = lo; i <= hi; ++i) {
    if (time_interval_undersample(d, i, num_sample, seed).rows() >= target) {
      best = i;
      infeasible = false;
    }
  }
  return {best, infeasible};
}

struct Blobs {
  Matrix X;
  std::vector<int> y;
};

Blobs blobs(std::size_t n_major, std::size_t n_minor, double separation, Rng& rng) {
  Blobs b;
  for (std::size_t i = 0; i < n_major; ++i) {
    b.X.append_row(std::vector<double>{rng.normal(), rng.normal()});
    b.y.push_back(0);
  }
  for (std::size_t i = 0; i < n_minor; ++i) {
    b.X.append_row(std::vector<double>{separation + rng.normal(), separation + rng.normal()});
    b.y.push_back(1);
  }
  return b;
}

double segment_distance(std::span<const double> p, std::span<const double> a, std::span<const double> b) {
  double ab2 = 0, t = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    ab2 += (b[i] - a[i]) * (b[i] - a[i]);
    t += (p[i] - a[i]) * (b[i] - a[i]);
  }
  t = ab2 > 0 ? std::clamp(t / ab2, 0.0, 1.0) : 0.0;
  double d2 = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = a[i] + t * (b[i] - a[i]);
    d2 += (p[i] - q) * (p[i] - q);
  }
  return std::sqrt(d2);
}

// Wilson editing by brute force over the full distance matrix.
std::vector<std::size_t> enn_oracle(const Matrix& X, const std::vector<int>& y, std::size_t k) {
  const std::size_t n = X.rows();
  std::vector<std::size_t> removed;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double s = 0;
      for (std::size_t c = 0; c < X.cols(); ++c) s += (X(i, c) - X(j, c)) * (X(i, c) - X(j, c));
      d.push_back({s, j});
    }
    std::sort(d.begin(), d.end());
    std::size_t disagree = 0;
    for (std::size_t m = 0; m < k; ++m) disagree += y[d[m].second] != y[i];
    if (2 * disagree > k) removed.push_back(i);
  }
  return removed;
}

}  // namespace

TEST_CASE("shift_labels marks the horizon window before an activation") {
  std::vector<std::int64_t> ts(201);
  std::iota(ts.begin(), ts.end(), std::int64_t{0});
  std::vector<double> alarm(201, 0.0);
  alarm[100] = 1.0;
  auto d = shift_labels(alarm_table(ts, alarm), kAlarmSchema, "alarm", 60);
  REQUIRE(d.rows() == 141);  // rows with t + 60 > 200 dropped
  CHECK(d.feature_names == std::vector<std::string>{"x"});
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const bool in_window = d.timestamps[i] >= 40 && d.timestamps[i] < 100;
    CHECK(d.y[i] == (in_window ? 1 : 0));
  }

  std::vector<double> quiet(201, 0.0);
  auto q = shift_labels(alarm_table(ts, quiet), kAlarmSchema, "alarm", 60);
  CHECK(q.count(1) == 0);
  CHECK(q.rows() == 141);
}

TEST_CASE("shift_labels equals a brute-force window scan") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::int64_t> ts;
    std::int64_t t = 0;
    const std::size_t n = 10 + rng.index(60);
    for (std::size_t i = 0; i < n; ++i) {
      ts.push_back(t);
      t += static_cast<std::int64_t>(rng.index(3));  // includes duplicate timestamps
    }
    std::vector<double> alarm(n);
    for (auto& a : alarm) a = rng.uniform() < 0.3 ? 1.0 : 0.0;
    const std::int64_t h = 1 + static_cast<std::int64_t>(rng.index(5));
    if (h >= ts.back() - ts.front()) continue;
    auto d = shift_labels(alarm_table(ts, alarm), kAlarmSchema, "alarm", h);
    std::size_t expect_rows = 0, expect_pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (ts[i] + h > ts.back()) continue;
      ++expect_rows;
      bool any = false;
      for (std::size_t j = 0; j < n; ++j) any = any || (alarm[j] != 0 && ts[j] > ts[i] && ts[j] <= ts[i] + h);
      expect_pos += any;
    }
    CHECK(d.rows() == expect_rows);
    CHECK(d.count(1) == expect_pos);
  }
}

TEST_CASE("shift_labels on a dense alternating toy table") {
  // Alarm 0,1,0,1,... at t = 0..9, horizon 2: row t sees t+1 and t+2, one of
  // which is always active. Rows t = 8, 9 fall off the end.
  std::vector<std::int64_t> ts(10);
  std::iota(ts.begin(), ts.end(), std::int64_t{0});
  std::vector<double> alarm{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  auto d = shift_labels(alarm_table(ts, alarm), kAlarmSchema, "alarm", 2);
  CHECK(d.y == std::vector<int>(8, 1));
  auto d1 = shift_labels(alarm_table(ts, alarm), kAlarmSchema, "alarm", 1);
  CHECK(d1.y == std::vector<int>{1, 0, 1, 0, 1, 0, 1, 0, 1});
}

TEST_CASE("shift_labels errors") {
  std::vector<std::int64_t> ts{0, 1, 2, 3};
  CHECK_THROWS_AS(shift_labels(alarm_table(ts, {0, 1, 0, 1}), kAlarmSchema, "alarm", 3), EmptyDatasetError);
  CHECK_THROWS_AS(shift_labels(alarm_table(ts, {0, 2, 0, 1}), kAlarmSchema, "alarm", 1), EncodingError);
  const std::vector<std::string> bad{"alarm"};
  CHECK_THROWS_AS(shift_labels(alarm_table(ts, {0, 1, 0, 1}), kAlarmSchema, "alarm", 1, bad), SchemaError);
}

TEST_CASE("encode_features one-hot encodes categorical columns in level-code order") {
  TimeTable t;
  t.timestamps = {0, 1, 2};
  t.columns = {{"x", ValueType::Numeric, {1.5, 2.5, 3.5}, {}}, {"k", ValueType::Text, {1, 0, 1}, {"on", "off"}}};
  Schema s{{"x", {FeatureKind::Continuous, 0}}, {"k", {FeatureKind::Categorical, 2}}};
  const std::vector<std::string> f{"x", "k"};
  auto d = encode_features(t, s, f);
  CHECK(d.feature_names == std::vector<std::string>{"x", "k=on", "k=off"});
  CHECK(d.group == std::vector<int>{-1, 0, 0});
  CHECK(d.sources == std::vector<std::string>{"k"});
  CHECK(d.X(0, 0) == 1.5);
  CHECK(d.X(0, 2) == 1.0);
  CHECK(d.X(0, 1) == 0.0);
  CHECK(d.X(1, 1) == 1.0);
}

TEST_CASE("time_interval_undersample examples") {
  SUBCASE("small bucket keeps everything") {
    auto d = labeled({0, 1, 2}, {0, 0, 0});
    CHECK(time_interval_undersample(d, 10, 5, 1).rows() == 3);
  }
  SUBCASE("large bucket keeps num_sample") {
    std::vector<std::int64_t> ts(10);
    std::iota(ts.begin(), ts.end(), std::int64_t{0});
    auto d = labeled(ts, std::vector<int>(10, 0));
    CHECK(time_interval_undersample(d, 100, 2, 1).rows() == 2);
  }
  SUBCASE("bucket counting over 100 uniform rows") {
    std::vector<std::int64_t> ts(100);
    std::iota(ts.begin(), ts.end(), std::int64_t{1000});
    auto d = labeled(ts, std::vector<int>(100, 0));
    auto u = time_interval_undersample(d, 10, 1, 9);
    CHECK(u.rows() == 10);
    std::set<std::int64_t> buckets;
    for (auto t : u.timestamps) buckets.insert((t - 1000) / 10);
    CHECK(buckets.size() == 10);
    CHECK(std::is_sorted(u.timestamps.begin(), u.timestamps.end()));
  }
  CHECK_THROWS_AS(time_interval_undersample(labeled({0}, {0}), 0, 1, 1), InvalidRangeError);
}

TEST_CASE("undersampling keeps every positive and is deterministic") {
  Rng rng(44);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::int64_t> ts;
    std::vector<int> y;
    std::int64_t t = 0;
    for (std::size_t i = 0; i < 300; ++i) {
      t += 1 + static_cast<std::int64_t>(rng.index(4));
      ts.push_back(t);
      y.push_back(rng.uniform() < 0.1 ? 1 : 0);
    }
    auto d = labeled(ts, y);
    const std::int64_t interval = 1 + static_cast<std::int64_t>(rng.index(50));
    const std::size_t num = 1 + rng.index(3);
    auto u = time_interval_undersample(d, interval, num, 5);
    CHECK(u.count(1) == d.count(1));
    CHECK(u.rows() == undersampled_size(d, interval, num));
    auto again = time_interval_undersample(d, interval, 2, 5);
    CHECK(again.timestamps == time_interval_undersample(d, interval, 2, 5).timestamps);
  }
}

TEST_CASE("undersampled size is non-increasing in interval on uniform cadence") {
  std::vector<std::int64_t> ts(1000);
  std::iota(ts.begin(), ts.end(), std::int64_t{0});
  auto d = labeled(ts, std::vector<int>(1000, 0));
  for (std::size_t num : {1, 2, 3}) {
    std::size_t prev = SIZE_MAX;
    for (std::int64_t i = 1; i <= 200; ++i) {
      const auto s = time_interval_undersample(d, i, num, 3).rows();
      CHECK(s <= prev);
      prev = s;
    }
  }
}

TEST_CASE("anchored buckets are not monotone on gappy timestamps") {
  // Negatives at t = 0, 9, 10 with one sample per bucket: width 4 gives
  // buckets {0}, {9, 10} (2 rows) while width 5 gives {0}, {9}, {10} (3 rows).
  auto d = labeled({0, 9, 10}, {0, 0, 0});
  CHECK(time_interval_undersample(d, 4, 1, 1).rows() == 2);
  CHECK(time_interval_undersample(d, 5, 1, 1).rows() == 3);
}

TEST_CASE("find_optimal_interval") {
  std::vector<std::int64_t> ts(1000);
  std::iota(ts.begin(), ts.end(), std::int64_t{0});
  auto d = labeled(ts, std::vector<int>(1000, 0));
  auto r = find_optimal_interval(d, 100, 1, 50, 1, 7);
  auto [want, infeasible] = linear_scan(d, 100, 1, 50, 1, 7);
  CHECK(r.interval == want);
  CHECK(r.interval == 10);
  CHECK_FALSE(r.infeasible);
  CHECK_FALSE(r.trace.empty());

  // target below the size at max_interval
  auto easy = find_optimal_interval(d, 5, 1, 50, 1, 7);
  CHECK(easy.interval == 50);
  CHECK_FALSE(easy.infeasible);
  // target above the size at min_interval
  auto hard = find_optimal_interval(d, 5000, 1, 50, 1, 7);
  CHECK(hard.interval == 50);
  CHECK(hard.infeasible);
  CHECK_THROWS_AS(find_optimal_interval(d, 5, 10, 5, 1, 7), InvalidRangeError);
}

TEST_CASE("find_optimal_interval equals a linear scan on uniform-cadence data") {
  Rng rng(123);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 100 + rng.index(1500);
    std::vector<std::int64_t> ts(n);
    std::iota(ts.begin(), ts.end(), std::int64_t{0});
    auto d = labeled(ts, std::vector<int>(n, 0));
    const std::size_t num = 1 + rng.index(3);
    const std::size_t target = 1 + rng.index(n);
    auto r = find_optimal_interval(d, target, 1, 120, num, 1);
    auto [want, infeasible] = linear_scan(d, target, 1, 120, num, 1);
    CHECK(r.interval == want);
    CHECK(r.infeasible == infeasible);
  }
}

TEST_CASE("smote places synthetic points on minority segments") {
  Matrix X;
  X.append_row(std::vector<double>{0, 0});
  X.append_row(std::vector<double>{1, 1});
  for (int i = 0; i < 6; ++i) X.append_row(std::vector<double>{5.0 + i, -3.0});
  std::vector<int> y{1, 1, 0, 0, 0, 0, 0, 0};
  auto r = smote(X, y, 1, 1.0, 3);
  CHECK(r.X.rows() == 12);
  for (std::size_t i = 8; i < 12; ++i) {
    CHECK(r.y[i] == 1);
    CHECK(r.X(i, 0) == r.X(i, 1));
    CHECK(r.X(i, 0) >= 0.0);
    CHECK(r.X(i, 0) <= 1.0);
  }
  CHECK_THROWS_AS(smote(X, y, 2, 1.0, 3), InsufficientMinorityError);
}

TEST_CASE("smote reaches the requested ratio and stays on segments") {
  Rng rng(8);
  auto b = blobs(200, 30, 3.0, rng);
  for (double ratio : {0.5, 0.75, 1.0}) {
    auto r = smote(b.X, b.y, 5, ratio, 11);
    CHECK(class_counts(r.y).positive == static_cast<std::size_t>(std::ceil(ratio * 200)));
    for (std::size_t s = 0; s < r.origins.size(); ++s) {
      const auto& o = r.origins[s];
      CHECK(b.y[o.base] == 1);
      CHECK(b.y[o.neighbor] == 1);
      CHECK(segment_distance(r.X.row(b.X.rows() + s), b.X.row(o.base), b.X.row(o.neighbor)) <= 1e-12);
    }
  }
}

TEST_CASE("smote snaps one-hot groups to a vertex") {
  Rng rng(2);
  Matrix X;
  std::vector<int> y;
  for (int i = 0; i < 40; ++i) {
    const std::size_t level = rng.index(3);
    X.append_row(std::vector<double>{rng.normal(), level == 0 ? 1.0 : 0.0, level == 1 ? 1.0 : 0.0, level == 2 ? 1.0 : 0.0});
    y.push_back(i < 8 ? 1 : 0);
  }
  const std::vector<int> group{-1, 1, 1, 1};
  auto r = smote(X, y, 3, 1.0, 5, group);
  for (std::size_t i = 40; i < r.X.rows(); ++i) {
    const double sum = r.X(i, 1) + r.X(i, 2) + r.X(i, 3);
    CHECK(sum == 1.0);
    for (std::size_t c = 1; c < 4; ++c) CHECK((r.X(i, c) == 0.0 || r.X(i, c) == 1.0));
  }
}

TEST_CASE("enn examples") {
  Matrix X;
  std::vector<int> y;
  // A class-0 point in the middle of three class-1 points, plus a far class-0 cluster.
  X.append_row(std::vector<double>{0, 0});
  y.push_back(0);
  for (auto [a, b] : {std::pair{0.1, 0.0}, {-0.1, 0.0}, {0.0, 0.1}}) {
    X.append_row(std::vector<double>{a, b});
    y.push_back(1);
  }
  for (int i = 0; i < 4; ++i) {
    X.append_row(std::vector<double>{10.0 + 0.1 * i, 10.0});
    y.push_back(0);
  }
  auto r = enn(X, y, 3);
  CHECK(r.removed == std::vector<std::size_t>{0});

  Rng rng(1);
  auto sep = blobs(30, 30, 50.0, rng);
  CHECK(enn(sep.X, sep.y, 3).removed.empty());

  CHECK_THROWS_AS(enn(X.select_rows(std::vector<std::size_t>{0, 1, 2}), std::vector<int>{0, 1, 1}, 3),
                  InsufficientDataError);
  // The lone class-0 point is removed: a whole class disappears.
  Matrix lone = X.select_rows(std::vector<std::size_t>{0, 1, 2, 3});
  CHECK_THROWS_AS(enn(lone, std::vector<int>{0, 1, 1, 1}, 3), DegenerateClassError);
}

TEST_CASE("enn removal set equals a quadratic-scan oracle") {
  Rng rng(91);
  for (int trial = 0; trial < 10; ++trial) {
    auto b = blobs(80, 60, 1.0, rng);
    for (std::size_t k : {1, 3, 5}) {
      auto r = enn(b.X, b.y, k);
      CHECK(r.removed == enn_oracle(b.X, b.y, k));
      CHECK(r.X.rows() + r.removed.size() == b.X.rows());
    }
  }
}

TEST_CASE("smoteenn balances seeded blobs and is deterministic") {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    auto b = blobs(300, 40, 2.0, rng);
    auto r = smoteenn(b.X, b.y, 5, 3, 17);
    CHECK(r.before == ClassCounts{300, 40});
    CHECK(r.after_smote == ClassCounts{300, 300});
    const double ratio = static_cast<double>(r.after.positive) / static_cast<double>(r.after.negative);
    CHECK(ratio >= 0.5);
    CHECK(ratio <= 2.0);
    auto again = smoteenn(b.X, b.y, 5, 3, 17);
    CHECK(again.X == r.X);
    CHECK(again.y == r.y);
  }
  Matrix X(5, 2, 0.0);
  CHECK_THROWS_AS(smoteenn(X, std::vector<int>(5, 0), 1, 3, 1), InsufficientMinorityError);
}

TEST_CASE("stratified_split") {
  std::vector<int> y(100);
  for (std::size_t i = 0; i < 100; ++i) y[i] = i % 2;
  auto s = stratified_split(y, 0.7, 4);
  CHECK(s.train.size() == 70);
  CHECK(s.test.size() == 30);
  std::size_t train_pos = 0;
  for (auto i : s.train) train_pos += y[i];
  CHECK(train_pos == 35);

  // 8/2 split: round(5.6) = 6 and round(1.4) = 1 go to train.
  std::vector<int> y10{0, 0, 0, 0, 0, 0, 0, 0, 1, 1};
  auto s10 = stratified_split(y10, 0.7, 4);
  std::size_t tr0 = 0, tr1 = 0, te0 = 0, te1 = 0;
  for (auto i : s10.train) (y10[i] ? tr1 : tr0)++;
  for (auto i : s10.test) (y10[i] ? te1 : te0)++;
  CHECK(tr0 == 6);
  CHECK(tr1 == 1);
  CHECK(te0 == 2);
  CHECK(te1 == 1);

  std::vector<std::size_t> all(s10.train);
  all.insert(all.end(), s10.test.begin(), s10.test.end());
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> expect(10);
  std::iota(expect.begin(), expect.end(), std::size_t{0});
  CHECK(all == expect);

  CHECK(stratified_split(y10, 0.7, 4).train == s10.train);
  CHECK_THROWS_AS(stratified_split(std::vector<int>{0, 0, 0, 1}, 0.7, 1), StratificationError);
}

TEST_CASE("standardizer fits on train only") {
  Rng rng(6);
  LabeledDataset train, test;
  for (auto* d : {&train, &test}) {
    d->feature_names = {"a", "flat", "k=x"};
    d->group = {-1, -1, 0};
    for (int i = 0; i < 200; ++i) {
      const double shift = d == &test ? 3.0 : 0.0;
      d->X.append_row(std::vector<double>{5 + 2 * rng.normal() + shift, 7.0, static_cast<double>(i % 2)});
      d->y.push_back(i % 2);
      d->timestamps.push_back(i);
    }
  }
  auto s = Standardizer::fit(train);
  s.apply(train);
  s.apply(test);
  auto col_stats = [](const Matrix& X, std::size_t c) {
    double m = 0, v = 0;
    for (std::size_t r = 0; r < X.rows(); ++r) m += X(r, c);
    m /= static_cast<double>(X.rows());
    for (std::size_t r = 0; r < X.rows(); ++r) v += (X(r, c) - m) * (X(r, c) - m);
    return std::pair{m, std::sqrt(v / static_cast<double>(X.rows()))};
  };
  auto [m, sd] = col_stats(train.X, 0);
  CHECK(std::abs(m) < 1e-9);
  CHECK(std::abs(sd - 1.0) < 1e-9);
  auto [fm, fsd] = col_stats(train.X, 1);
  CHECK(std::abs(fm) < 1e-9);
  CHECK(fsd == 0.0);
  CHECK(train.X(1, 2) == 1.0);  // one-hot passes through
  CHECK(std::abs(col_stats(test.X, 0).first) > 0.5);  // no leakage
}
