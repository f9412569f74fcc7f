#include "pdm/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pdm/error.hpp"
#include "pdm/parallel.hpp"
#include "pdm/rng.hpp"

namespace pdm {

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  const TreeNode* node = &nodes.front();
  while (!node->leaf()) {
    node = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left
                                                                                                          : node->right)];
  }
  return *node;
}

int DecisionTree::predict(std::span<const double> x) const {
  const auto& c = leaf_for(x).counts;
  return c[1] > c[0] ? 1 : 0;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

double ForestModel::vote_fraction(std::span<const double> x) const {
  if (x.size() != n_features) throw SchemaError("feature dimension mismatch");
  std::size_t votes = 0;
  for (const auto& t : trees) votes += static_cast<std::size_t>(t.predict(x));
  return static_cast<double>(votes) / static_cast<double>(trees.size());
}

int ForestModel::predict(std::span<const double> x) const { return vote_fraction(x) > 0.5 ? 1 : 0; }

std::vector<int> ForestModel::predict(const Matrix& X) const {
  std::vector<int> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out[r] = predict(X.row(r));
  return out;
}

std::vector<double> ForestModel::vote_fractions(const Matrix& X) const {
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out[r] = vote_fraction(X.row(r));
  return out;
}

namespace {

double gini(std::size_t n0, std::size_t n1) {
  const double n = static_cast<double>(n0 + n1);
  if (n == 0.0) return 0.0;
  const double p0 = static_cast<double>(n0) / n;
  const double p1 = static_cast<double>(n1) / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, std::span<const int> y, const ForestParams& params, std::size_t max_features,
              Rng& rng)
      : X_(X), y_(y), params_(params), max_features_(max_features), rng_(rng) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t>& rows, std::size_t depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    std::array<std::size_t, 2> counts{};
    for (auto r : rows) ++counts[static_cast<std::size_t>(y_[r])];
    tree_.nodes[static_cast<std::size_t>(id)].counts = counts;
    if (depth >= params_.max_depth || counts[0] == 0 || counts[1] == 0 || rows.size() < 2 * params_.min_leaf) {
      return id;
    }
    const double parent = gini(counts[0], counts[1]);
    const double n = static_cast<double>(rows.size());

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_impurity = parent - 1e-12;
    std::vector<std::pair<double, int>> column(rows.size());
    for (auto f : rng_.sample_without_replacement(X_.cols(), max_features_)) {
      for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {X_(rows[i], f), y_[rows[i]]};
      std::sort(column.begin(), column.end());
      std::array<std::size_t, 2> left{};
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        ++left[static_cast<std::size_t>(column[i].second)];
        if (column[i].first == column[i + 1].first) continue;
        const std::size_t n_left = i + 1;
        const std::size_t n_right = column.size() - n_left;
        if (n_left < params_.min_leaf || n_right < params_.min_leaf) continue;
        const double impurity = (static_cast<double>(n_left) * gini(left[0], left[1]) +
                                 static_cast<double>(n_right) * gini(counts[0] - left[0], counts[1] - left[1])) /
                                n;
        if (impurity < best_impurity) {
          best_impurity = impurity;
          best_feature = static_cast<int>(f);
          best_threshold = column[i].first + 0.5 * (column[i + 1].first - column[i].first);
          if (best_threshold >= column[i + 1].first) best_threshold = column[i].first;
        }
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (auto r : rows) {
      (X_(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? left_rows : right_rows).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(left_rows, depth + 1);
    const int r = grow(right_rows, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  const Matrix& X_;
  std::span<const int> y_;
  const ForestParams& params_;
  std::size_t max_features_;
  Rng& rng_;
  DecisionTree tree_;
};

}  // namespace

ForestModel train_forest(const Matrix& X, std::span<const int> y, const ForestParams& params, std::uint64_t seed,
                         std::size_t jobs) {
  if (X.rows() != y.size()) throw SchemaError("X and y differ in length");
  if (X.rows() == 0) throw EmptyDatasetError("no training rows");
  if (params.n_trees == 0) throw ValidationError("n_trees must be positive");
  if (params.min_leaf == 0) throw ValidationError("min_leaf must be positive");
  for (int v : y) {
    if (v != 0 && v != 1) throw EncodingError("labels must be 0/1");
  }
  const auto positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  if (positives == 0 || positives == y.size()) throw DegenerateClassError("training data has a single class");

  const std::size_t d = X.cols();
  std::size_t max_features = params.max_features;
  if (max_features == 0) max_features = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d))));
  max_features = std::clamp<std::size_t>(max_features, 1, d);

  ForestModel model;
  model.params = params;
  model.seed = seed;
  model.n_features = d;
  model.trees.resize(params.n_trees);
  parallel_for(params.n_trees, jobs, [&](std::size_t t) {
    Rng rng(derive_seed(seed, t));
    std::vector<std::size_t> rows(X.rows());
    if (params.bootstrap) {
      for (auto& r : rows) r = rng.index(X.rows());
      std::sort(rows.begin(), rows.end());
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    model.trees[t] = TreeBuilder(X, y, params, max_features, rng).build(std::move(rows));
  });
  return model;
}

}  // namespace pdm
