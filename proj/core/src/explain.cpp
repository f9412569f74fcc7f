#include <algorithm>
#include <cmath>
#include <map>

#include "pdm/error.hpp"
#include "pdm/evaluate.hpp"
#include "pdm/linalg.hpp"
#include "pdm/rng.hpp"

namespace pdm {

namespace {

constexpr double kRidge = 1e-6;

}  // namespace

Explanation lime_explain(const ForestModel& model, const LabeledDataset& train, const LabeledDataset& data,
                         std::size_t instance, const LimeOptions& options, std::uint64_t seed) {
  const std::size_t d = model.n_features;
  if (data.X.cols() != d || train.X.cols() != d) throw SchemaError("instance dimension does not match the model");
  if (instance >= data.rows()) throw ValidationError("instance index out of range");
  if (train.rows() == 0) throw EmptyDatasetError("no training rows for perturbation statistics");
  if (options.n_perturb < 2) throw ValidationError("n_perturb must be at least 2");

  // Perturbation scales from the training rows.
  std::vector<double> sd(d, 0.0);
  std::map<int, std::vector<std::size_t>> groups;
  std::map<int, std::vector<double>> marginals;  // cumulative level frequencies
  for (std::size_t c = 0; c < d; ++c) {
    const int g = train.group[c];
    if (g >= 0) {
      groups[g].push_back(c);
      continue;
    }
    double mean = 0.0;
    for (std::size_t r = 0; r < train.rows(); ++r) mean += train.X(r, c);
    mean /= static_cast<double>(train.rows());
    double ss = 0.0;
    for (std::size_t r = 0; r < train.rows(); ++r) ss += (train.X(r, c) - mean) * (train.X(r, c) - mean);
    sd[c] = std::sqrt(ss / static_cast<double>(train.rows()));
  }
  for (const auto& [g, cols] : groups) {
    std::vector<double> cum;
    double total = 0.0;
    for (auto c : cols) {
      for (std::size_t r = 0; r < train.rows(); ++r) total += train.X(r, c);
      cum.push_back(total);
    }
    for (auto& v : cum) v = total > 0 ? v / total : 0.0;
    marginals[g] = std::move(cum);
  }

  const auto x0 = data.X.row(instance);
  const double width = options.kernel_width > 0 ? options.kernel_width : 0.75 * std::sqrt(static_cast<double>(d));
  const std::size_t n = options.n_perturb;
  Matrix Z(n, d);
  std::vector<double> kernel(n);
  std::vector<double> score(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto z = Z.row(i);
    std::copy(x0.begin(), x0.end(), z.begin());
    if (i > 0) {
      Rng rng(derive_seed(seed, i));
      for (std::size_t c = 0; c < d; ++c) {
        if (train.group[c] < 0 && sd[c] > 0) z[c] = x0[c] + sd[c] * rng.normal();
      }
      for (const auto& [g, cols] : groups) {
        const auto& cum = marginals[g];
        const double u = rng.uniform();
        std::size_t pick = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        pick = std::min(pick, cols.size() - 1);
        for (std::size_t l = 0; l < cols.size(); ++l) z[cols[l]] = l == pick ? 1.0 : 0.0;
      }
    }
    double dist2 = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double delta = z[c] - x0[c];
      if (train.group[c] >= 0) {
        dist2 += delta * delta;
      } else if (sd[c] > 0) {
        dist2 += (delta / sd[c]) * (delta / sd[c]);
      }
    }
    kernel[i] = std::exp(-dist2 / (width * width));
    score[i] = model.vote_fraction(z);
  }

  // Surrogate design: standardized offsets for continuous columns, level
  // indicators for one-hot columns other than the instance's own level.
  std::vector<std::size_t> design;
  for (std::size_t c = 0; c < d; ++c) {
    if (train.group[c] < 0 ? sd[c] > 0 : x0[c] == 0.0) design.push_back(c);
  }
  auto feature_value = [&](std::size_t i, std::size_t c) {
    return train.group[c] < 0 ? (Z(i, c) - x0[c]) / sd[c] : Z(i, c);
  };
  // Columns that never vary among the perturbations cannot be estimated.
  std::erase_if(design, [&](std::size_t c) {
    for (std::size_t i = 1; i < n; ++i) {
      if (feature_value(i, c) != feature_value(0, c)) return false;
    }
    return true;
  });

  const std::size_t p = design.size() + 1;
  Matrix A(p, p);
  std::vector<double> b(p, 0.0);
  std::vector<double> phi(p);
  for (std::size_t i = 0; i < n; ++i) {
    phi[0] = 1.0;
    for (std::size_t j = 0; j < design.size(); ++j) phi[j + 1] = feature_value(i, design[j]);
    for (std::size_t a = 0; a < p; ++a) {
      b[a] += kernel[i] * phi[a] * score[i];
      for (std::size_t c = 0; c < p; ++c) A(a, c) += kernel[i] * phi[a] * phi[c];
    }
  }
  Explanation out;
  out.instance = instance;
  auto beta = solve_spd(A, b);
  if (!beta) {
    out.ridge_fallback = true;
    for (std::size_t a = 1; a < p; ++a) A(a, a) += kRidge;
    beta = solve_spd(A, b);
    if (!beta) throw DegenerateDatasetError("surrogate normal equations are singular even with ridge");
  }
  out.intercept = (*beta)[0];

  double wsum = 0.0;
  double wy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wsum += kernel[i];
    wy += kernel[i] * score[i];
  }
  const double ybar = wy / wsum;
  double ss_tot = 0.0;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double fit = out.intercept;
    for (std::size_t j = 0; j < design.size(); ++j) fit += (*beta)[j + 1] * feature_value(i, design[j]);
    ss_tot += kernel[i] * (score[i] - ybar) * (score[i] - ybar);
    ss_res += kernel[i] * (score[i] - fit) * (score[i] - fit);
  }
  if (ss_tot <= 1e-15 * wsum) {
    out.r2_undefined = true;
  } else {
    out.r2 = 1.0 - ss_res / ss_tot;
  }

  std::vector<double> weight(d, 0.0);
  for (std::size_t j = 0; j < design.size(); ++j) weight[design[j]] = (*beta)[j + 1];
  for (std::size_t c = 0; c < d; ++c) {
    out.weights.push_back({c < data.feature_names.size() ? data.feature_names[c] : std::to_string(c), weight[c]});
  }
  std::stable_sort(out.weights.begin(), out.weights.end(), [](const FeatureWeight& a, const FeatureWeight& b) {
    if (std::abs(a.weight) != std::abs(b.weight)) return std::abs(a.weight) > std::abs(b.weight);
    return a.feature < b.feature;
  });
  if (options.top_k > 0 && out.weights.size() > options.top_k) out.weights.resize(options.top_k);
  return out;
}

}  // namespace pdm
