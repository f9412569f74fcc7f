#include "pdm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pdm/error.hpp"
#include "pdm/rng.hpp"

namespace pdm {

namespace {

constexpr double kRegimePhi = 0.95;
constexpr double kRegimeNoise = 0.02;
// Regime durations in rows (seconds): normal stretches last kGapMin plus an
// exponential with mean kGapMean; faults last uniformly [kFaultMin, kFaultMax].
constexpr double kGapMin = 1000.0;
constexpr double kGapMean = 3000.0;
constexpr double kFaultMin = 600.0;
constexpr double kFaultMax = 1800.0;
constexpr double kBackgroundPhi = 0.9;

void standardize(std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / n);
  for (double& x : v) x = sd > 0 ? (x - mean) / sd : 0.0;
}

std::vector<double> gaussian_ar1(std::size_t n, double phi, Rng& rng) {
  std::vector<double> x(n);
  const double innovation = std::sqrt(1.0 - phi * phi);
  x[0] = rng.normal();
  for (std::size_t i = 1; i < n; ++i) x[i] = phi * x[i - 1] + innovation * rng.normal();
  standardize(x);
  return x;
}

/// AR(1) around a mean that sits at 0 and jumps to 1 during rarer, bounded
/// fault episodes. Returned on that raw scale; the alarm threshold applies
/// here, so it lands at the same level whatever fault share a draw contains.
std::vector<double> regime_ar1(std::size_t n, Rng& rng) {
  std::vector<double> x(n);
  double mu = 0.0;
  double remaining = kGapMin - kGapMean * std::log(1.0 - rng.uniform());
  x[0] = mu;
  for (std::size_t i = 1; i < n; ++i) {
    if (--remaining <= 0) {
      mu = 1.0 - mu;
      remaining = mu > 0 ? rng.uniform(kFaultMin, kFaultMax) : kGapMin - kGapMean * std::log(1.0 - rng.uniform());
    }
    x[i] = kRegimePhi * x[i - 1] + (1.0 - kRegimePhi) * mu + kRegimeNoise * rng.normal();
  }
  return x;
}

/// Inverse standard normal CDF by bisection; only used for a few bin edges.
double normal_quantile(double p) {
  double lo = -10.0;
  double hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

Column numeric_column(std::string name, std::vector<double> values) {
  Column c;
  c.name = std::move(name);
  c.type = ValueType::Numeric;
  c.values = std::move(values);
  return c;
}

}  // namespace

void validate(const SyntheticSpec& spec) {
  if (spec.n_rows < 2) throw SpecError("n_rows must be at least 2");
  if (spec.clusters.empty()) throw SpecError("at least one cluster is required");
  for (const auto& c : spec.clusters) {
    if (c.continuous + c.categorical == 0) throw SpecError("every cluster needs at least one feature");
  }
  if (!(spec.rho >= 0.0 && spec.rho < 1.0)) throw SpecError("rho must lie in [0, 1)");
  if (spec.alarm.driving_cluster >= spec.clusters.size()) throw SpecError("driving cluster out of range");
  if (spec.alarm.lead < 0) throw SpecError("lead time must be non-negative");
  if (spec.alarm.lead >= static_cast<std::int64_t>(spec.n_rows) - 1) throw SpecError("lead time must be shorter than the data span");
  if (!(spec.missing_rate >= 0.0 && spec.missing_rate < 1.0)) throw SpecError("missing rate must lie in [0, 1)");
  if (!(spec.stationary_fraction >= 0.0 && spec.stationary_fraction < 1.0)) {
    throw SpecError("stationary fraction must lie in [0, 1)");
  }
  if (spec.categorical_bins < 2 || spec.categorical_bins >= 20) throw SpecError("categorical_bins must be in [2, 20)");
}

SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  validate(spec);
  const std::size_t n = spec.n_rows;
  SyntheticData out;
  auto& table = out.table;
  auto& manifest = out.manifest;
  table.timestamp_name = "timestamp";
  table.timestamp_format = TimestampFormat::Iso8601;
  table.timestamps.resize(n);
  for (std::size_t i = 0; i < n; ++i) table.timestamps[i] = spec.start + static_cast<std::int64_t>(i);

  std::vector<double> edges;
  for (std::size_t b = 1; b < spec.categorical_bins; ++b) {
    edges.push_back(normal_quantile(static_cast<double>(b) / static_cast<double>(spec.categorical_bins)));
  }
  const double load = std::sqrt(spec.rho);
  const double noise = std::sqrt(1.0 - spec.rho);
  std::vector<double> driving;
  std::uint64_t stream = 0;
  for (std::size_t c = 0; c < spec.clusters.size(); ++c) {
    Rng factor_rng(derive_seed(seed, stream++));
    const bool is_driving = c == spec.alarm.driving_cluster;
    auto raw = is_driving ? regime_ar1(n, factor_rng) : std::vector<double>{};
    auto factor = is_driving ? raw : gaussian_ar1(n, kBackgroundPhi, factor_rng);
    if (is_driving) standardize(factor);
    std::vector<std::string> members;
    const auto& cs = spec.clusters[c];
    for (std::size_t j = 0; j < cs.continuous + cs.categorical; ++j) {
      Rng rng(derive_seed(seed, stream++));
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = load * factor[i] + noise * rng.normal();
      const bool categorical = j >= cs.continuous;
      std::string name = "c" + std::to_string(c) + (categorical ? "_k" : "_x") +
                         std::to_string(categorical ? j - cs.continuous : j);
      if (categorical) {
        for (auto& x : v) x = static_cast<double>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
      }
      members.push_back(name);
      table.columns.push_back(numeric_column(std::move(name), std::move(v)));
    }
    if (is_driving) {
      driving = std::move(raw);
      manifest.driving_features = members;
    }
    manifest.clusters.push_back(std::move(members));
  }

  // Vehicle motion: speed and motor rpm, both exactly zero while stationary.
  {
    Rng rng(derive_seed(seed, stream++));
    auto base = gaussian_ar1(n, 0.99, rng);
    std::vector<double> speed(n);
    std::vector<double> rpm(n);
    bool stationary = false;
    const double mean_stop = 300.0;
    const double mean_move =
        spec.stationary_fraction > 0 ? mean_stop * (1.0 - spec.stationary_fraction) / spec.stationary_fraction : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (spec.stationary_fraction > 0) {
        const double leave = 1.0 / (stationary ? mean_stop : mean_move);
        if (rng.uniform() < leave) stationary = !stationary;
      }
      if (stationary) {
        speed[i] = 0.0;
        rpm[i] = 0.0;
      } else {
        speed[i] = std::max(1.0, 40.0 + 12.0 * base[i]);
        rpm[i] = std::round(speed[i] * 30.0 + 25.0 * rng.normal());
        rpm[i] = std::max(rpm[i], 100.0);
      }
    }
    table.columns.push_back(numeric_column("vehicle_speed", std::move(speed)));
    table.columns.push_back(numeric_column("motor_rpm", std::move(rpm)));
    manifest.stationary_columns = {"vehicle_speed", "motor_rpm"};
  }

  if (spec.protocol_columns) {
    Rng rng(derive_seed(seed, stream++));
    std::vector<double> checksum(n);
    for (auto& v : checksum) v = static_cast<double>(rng.index(256));
    table.columns.push_back(numeric_column("CAN1.Status.Checksum", std::move(checksum)));
    table.columns.push_back(numeric_column("firmware_version", std::vector<double>(n, 3.0)));
  }

  if (spec.missing_rate > 0) {
    Rng rng(derive_seed(seed, stream++));
    for (auto& col : table.columns) {
      for (auto& v : col.values) {
        if (rng.uniform() < spec.missing_rate) v = kMissing;
      }
    }
  }

  // Alarm: active at row i iff the driving factor exceeded the threshold at
  // row i - lead (1 Hz rows, so rows and seconds coincide).
  const auto lead = static_cast<std::size_t>(spec.alarm.lead);
  std::vector<double> alarm(n, 0.0);
  for (std::size_t i = lead; i < n; ++i) alarm[i] = driving[i - lead] > spec.alarm.threshold ? 1.0 : 0.0;
  for (std::size_t i = 0; i + lead < n; ++i) {
    const bool above = driving[i] > spec.alarm.threshold;
    const bool was_above = i > 0 && driving[i - 1] > spec.alarm.threshold;
    if (above && !was_above) {
      manifest.crossings.push_back(table.timestamps[i]);
      manifest.onsets.push_back(table.timestamps[i + lead]);
    }
  }
  table.columns.push_back(numeric_column(manifest.target, std::move(alarm)));
  manifest.driving_cluster = spec.alarm.driving_cluster;
  manifest.threshold = spec.alarm.threshold;
  manifest.lead = spec.alarm.lead;
  return out;
}

}  // namespace pdm
