#include <doctest.h>

#include <cmath>
#include <sstream>

#include "pdm/error.hpp"
#include "pdm/ingest.hpp"
#include "pdm/spline.hpp"
#include "support.hpp"

using namespace pdm;
using pdm::test::parse_csv;

namespace {

// Natural cubic spline through four equally spaced knots, solved by hand:
// the two interior second derivatives satisfy a 2x2 system.
double four_knot_spline(const double x[4], const double y[4], double at) {
  const double h = x[1] - x[0];
  const double r1 = 6.0 / (h * h) * (y[2] - 2 * y[1] + y[0]);
  const double r2 = 6.0 / (h * h) * (y[3] - 2 * y[2] + y[1]);
  // [4 1; 1 4] [m1 m2]' = [r1 r2]'
  const double m1 = (4 * r1 - r2) / 15.0;
  const double m2 = (4 * r2 - r1) / 15.0;
  const double m[4] = {0.0, m1, m2, 0.0};
  std::size_t i = at < x[1] ? 0 : at < x[2] ? 1 : 2;
  const double a = x[i + 1] - at;
  const double b = at - x[i];
  return m[i] * a * a * a / (6 * h) + m[i + 1] * b * b * b / (6 * h) + (y[i] / h - m[i] * h / 6) * a +
         (y[i + 1] / h - m[i + 1] * h / 6) * b;
}

Schema continuous_schema(const TimeTable& t) {
  Schema s;
  for (const auto& c : t.columns) s[c.name] = {FeatureKind::Continuous, 0};
  return s;
}

}  // namespace

TEST_CASE("parse_table reads ISO timestamps in order") {
  auto t = parse_csv("timestamp,a\n2021-09-30T00:00:00,1\n2021-09-30T00:00:01,2\n2021-09-30T00:00:02,3\n");
  REQUIRE(t.rows() == 3);
  CHECK(t.timestamps[1] - t.timestamps[0] == 1);
  CHECK(t.timestamps[2] - t.timestamps[1] == 1);
  CHECK(t.timestamp_format == TimestampFormat::Iso8601);
}

TEST_CASE("parse_table sorts out-of-order rows and keeps input order on ties") {
  auto t = parse_csv("timestamp,a\n30,3\n10,1\n20,2\n20,9\n");
  CHECK(t.timestamps == std::vector<std::int64_t>{10, 20, 20, 30});
  CHECK(t.column("a").values == std::vector<double>{1, 2, 9, 3});
  CHECK(t.timestamp_format == TimestampFormat::EpochSeconds);
}

TEST_CASE("parse_table marks unparseable numeric cells missing and keeps the row") {
  auto t = parse_csv("timestamp,a,b\n0,1,x\n1,abc,y\n2,3,\n3,4,x\n");
  REQUIRE(t.rows() == 4);
  CHECK(t.column("a").missing_count() == 1);
  CHECK(t.column("a").missing(1));
  CHECK(t.column("b").type == ValueType::Text);
  CHECK(t.column("b").missing_count() == 1);

  // Round-trip oracle: serialize and re-parse, the missing count survives.
  std::ostringstream out;
  write_table(t, out);
  auto back = parse_csv(out.str());
  CHECK(back.column("a").missing_count() == 1);
  CHECK(back == t);
}

TEST_CASE("parse_table errors") {
  CHECK_THROWS_AS(parse_csv(""), FormatError);
  CHECK_THROWS_AS(parse_csv("time,a\n0,1\n"), SchemaError);
  CHECK_THROWS_AS(parse_csv("timestamp,a\n"), EmptyInputError);
  CHECK_THROWS_AS(parse_table(std::filesystem::path("/nonexistent/x.csv"), "timestamp"), IoError);
}

TEST_CASE("parse_table round-trips random tables") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::ostringstream csv;
    csv << "timestamp,x,k,s\n";
    for (int r = 0; r < 30; ++r) {
      csv << 1632960000 + r * 2 << ",";
      if (rng.uniform() < 0.1) {
        csv << ",";
      } else {
        csv << rng.normal() * 100 << ",";
      }
      csv << rng.index(4) << "," << (rng.uniform() < 0.5 ? "on" : "off") << "\n";
    }
    auto t = parse_csv(csv.str());
    std::ostringstream out;
    write_table(t, out);
    CHECK(parse_csv(out.str()) == t);
  }
}

TEST_CASE("infer_feature_kinds") {
  std::ostringstream csv;
  csv << "timestamp,bin,wide,twenty,nineteen,text,alarm\n";
  for (int r = 0; r < 500; ++r) {
    csv << r << "," << r % 2 << "," << r * 0.37 << "," << r % 20 << "," << r % 19 << ","
        << (r % 3 == 0 ? "A" : "B") << "," << (r % 50 == 0 ? 1 : 0) << "\n";
  }
  auto t = parse_csv(csv.str());
  const std::vector<std::string> targets{"alarm"};
  auto s = infer_feature_kinds(t, 20, targets);
  CHECK(s["bin"] == FeatureSpec{FeatureKind::Categorical, 2});
  CHECK(s["wide"].kind == FeatureKind::Continuous);
  CHECK(s["twenty"].kind == FeatureKind::Continuous);  // strict "< cap"
  CHECK(s["nineteen"] == FeatureSpec{FeatureKind::Categorical, 19});
  CHECK(s["text"] == FeatureSpec{FeatureKind::Categorical, 2});
  CHECK(s["alarm"].kind == FeatureKind::Categorical);

  // A target is categorical even above the cap.
  auto t2 = parse_csv("timestamp,alarm\n0,0.5\n1,1.5\n2,2.5\n");
  CHECK(infer_feature_kinds(t2, 2, targets)["alarm"].kind == FeatureKind::Categorical);
  CHECK(infer_feature_kinds(t2, 2)["alarm"].kind == FeatureKind::Continuous);

  // Pure function of (values, cap).
  CHECK(infer_feature_kinds(t, 20, targets) == s);

  auto empty_col = parse_csv("timestamp,a,b\n0,,1\n1,,2\n");
  CHECK_THROWS_AS(infer_feature_kinds(empty_col), UntypeableColumnError);
}

TEST_CASE("drop_uninformative") {
  auto t = parse_csv(
      "timestamp,const,CAN1.X.Checksum,alarm,level,one\n"
      "0,5,17,0,1.5,A\n1,5,200,1,2.5,A\n2,5,3,0,3.5,A\n3,5,99,1,0.25,A\n");
  const std::vector<std::string> targets{"alarm"};
  auto schema = infer_feature_kinds(t, 3, targets);
  const std::vector<std::string> patterns{"*Checksum*"};
  auto r = drop_uninformative(t, schema, patterns);
  CHECK(r.table.column_names() == std::vector<std::string>{"alarm", "level"});
  REQUIRE(r.removed.size() == 3);
  CHECK(r.removed[0] == Removal{"const", "single value"});
  CHECK(r.removed[1] == Removal{"CAN1.X.Checksum", "protocol"});
  CHECK(r.removed[2] == Removal{"one", "single value"});

  Schema continuous = continuous_schema(t);
  continuous["one"] = {FeatureKind::Categorical, 1};
  auto r2 = drop_uninformative(t, continuous, patterns);
  CHECK(r2.removed[0] == Removal{"const", "zero variance"});

  auto all_const = parse_csv("timestamp,a,b\n0,1,2\n1,1,2\n");
  CHECK_THROWS_AS(drop_uninformative(all_const, continuous_schema(all_const), patterns), DegenerateDatasetError);
}

TEST_CASE("filter_stationary") {
  auto t = parse_csv("timestamp,speed,rpm\n0,0,0\n1,3,100\n2,0,5\n3,7,0\n4,0.4,12\n5,0.5,10\n");
  auto schema = continuous_schema(t);

  const std::vector<StationaryClause> speed_only{{"speed", Comparator::LessEqual, 0.0}};
  auto a = filter_stationary(t, schema, speed_only);
  CHECK(a.timestamps == std::vector<std::int64_t>{1, 3, 4, 5});

  CHECK(filter_stationary(t, schema, {}) == t);

  // Hand-evaluated mask for (speed <= 0.5) AND (rpm <= 10):
  // row0 both hold (drop), row1 no, row2 both (drop), row3 speed no,
  // row4 rpm 12 no, row5 both (drop).
  const std::vector<StationaryClause> both{{"speed", Comparator::LessEqual, 0.5}, {"rpm", Comparator::LessEqual, 10}};
  auto b = filter_stationary(t, schema, both);
  CHECK(b.timestamps == std::vector<std::int64_t>{1, 3, 4});
  CHECK(b.column("rpm").values == std::vector<double>{100, 0, 12});

  const std::vector<StationaryClause> missing{{"nope", Comparator::LessEqual, 0.0}};
  CHECK_THROWS_AS(filter_stationary(t, schema, missing), SchemaError);
}

TEST_CASE("filter_stationary preserves the order of surviving rows") {
  Rng rng(5);
  std::ostringstream csv;
  csv << "timestamp,speed\n";
  for (int r = 0; r < 200; ++r) csv << r << "," << (rng.uniform() < 0.4 ? 0.0 : rng.uniform()) << "\n";
  auto t = parse_csv(csv.str());
  const std::vector<StationaryClause> p{{"speed", Comparator::LessEqual, 0.0}};
  auto f = filter_stationary(t, continuous_schema(t), p);
  CHECK(std::is_sorted(f.timestamps.begin(), f.timestamps.end()));
  for (double v : f.column("speed").values) CHECK(v > 0.0);
}

TEST_CASE("natural cubic spline matches the hand-solved four-knot system") {
  const double x[4] = {0, 1, 2, 3};
  const double y[4] = {0, 1, 8, 27};
  NaturalCubicSpline s(x, y);
  CHECK(s(1.5) == doctest::Approx(four_knot_spline(x, y, 1.5)).epsilon(1e-12));
  CHECK(s(1.5) == doctest::Approx(3.15).epsilon(1e-12));
  for (double at : {0.25, 0.5, 2.2, 2.9}) CHECK(s(at) == doctest::Approx(four_knot_spline(x, y, at)).epsilon(1e-12));
  CHECK(s(-5) == 0.0);  // clamped
  CHECK(s(10) == 27.0);
}

TEST_CASE("impute") {
  SUBCASE("two knots degenerate to linear") {
    auto t = parse_csv("timestamp,a\n0,1\n1,\n2,3\n");
    auto out = impute(t, continuous_schema(t));
    CHECK(out.column("a").values[1] == doctest::Approx(2.0));
  }
  SUBCASE("categorical forward fill with back-filled head") {
    auto t = parse_csv("timestamp,k\n0,A\n1,\n2,\n3,B\n");
    Schema s{{"k", {FeatureKind::Categorical, 2}}};
    auto out = impute(t, s);
    std::vector<std::string> cells;
    for (std::size_t r = 0; r < 4; ++r) cells.push_back(out.column("k").cell_text(r));
    CHECK(cells == std::vector<std::string>{"A", "A", "A", "B"});

    auto head = parse_csv("timestamp,k\n0,\n1,\n2,B\n3,A\n");
    auto out2 = impute(head, s);
    CHECK(out2.column("k").cell_text(0) == "B");
  }
  SUBCASE("spline fill uses time as the abscissa") {
    auto t = parse_csv("timestamp,a\n0,0\n2,1\n3,\n4,8\n6,27\n");
    auto out = impute(t, continuous_schema(t));
    const double x[4] = {0, 2, 4, 6};
    const double y[4] = {0, 1, 8, 27};
    CHECK(out.column("a").values[2] == doctest::Approx(four_knot_spline(x, y, 3.0)).epsilon(1e-12));
  }
  SUBCASE("one observed value fills the column with a constant") {
    auto t = parse_csv("timestamp,a,b\n0,,1\n1,4,2\n2,,3\n");
    auto out = impute(t, continuous_schema(t));
    CHECK(out.column("a").values == std::vector<double>{4, 4, 4});
  }
  SUBCASE("entirely missing column") {
    auto t = parse_csv("timestamp,a,b\n0,,1\n1,,2\n");
    CHECK_THROWS_AS(impute(t, continuous_schema(t)), UntypeableColumnError);
  }
}

TEST_CASE("impute leaves no gaps and is idempotent") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    std::ostringstream csv;
    csv << "timestamp,x,k\n";
    for (int r = 0; r < 60; ++r) {
      csv << r << ",";
      if (r > 0 && rng.uniform() < 0.3) csv << "";
      else csv << rng.normal();
      csv << ",";
      if (r > 0 && rng.uniform() < 0.3) csv << "";
      else csv << (rng.uniform() < 0.5 ? "a" : "b");
      csv << "\n";
    }
    auto t = parse_csv(csv.str());
    Schema s{{"x", {FeatureKind::Continuous, 0}}, {"k", {FeatureKind::Categorical, 2}}};
    auto once = impute(t, s);
    for (const auto& c : once.columns) CHECK(c.missing_count() == 0);
    CHECK(impute(once, s) == once);
  }
}

TEST_CASE("summarize") {
  const std::vector<double> v{1, 2, 3, 4, 100};
  auto s = summarize(v);
  CHECK(s.mean == doctest::Approx(22.0));
  CHECK(s.min == 1);
  CHECK(s.max == 100);
  CHECK(s.median == 3);
  CHECK(s.skew_direction == SkewDirection::Right);
  CHECK(s.std >= 0);
  CHECK(s.min <= s.median);
  CHECK(s.median <= s.max);
}
