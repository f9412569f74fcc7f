#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pdm/matrix.hpp"

namespace pdm {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  std::array<std::size_t, 2> counts{};  // class counts of the training rows reaching the node

  bool leaf() const noexcept { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  const TreeNode& leaf_for(std::span<const double> x) const;
  /// Leaf majority class; ties go to class 0.
  int predict(std::span<const double> x) const;
  std::size_t depth() const;
  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct ForestParams {
  std::size_t n_trees = 100;
  std::size_t max_depth = 10;
  std::size_t min_leaf = 1;
  std::size_t max_features = 0;  // 0 = floor(sqrt(d)), at least 1
  bool bootstrap = true;
  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  ForestParams params;
  std::uint64_t seed = 0;
  std::size_t n_features = 0;
  std::vector<std::string> feature_names;

  /// Fraction of trees voting for class 1.
  double vote_fraction(std::span<const double> x) const;
  /// Majority vote; an exact tie goes to class 0.
  int predict(std::span<const double> x) const;
  std::vector<int> predict(const Matrix& X) const;
  std::vector<double> vote_fractions(const Matrix& X) const;

  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

/// Bagged CART trees (Gini). Tree t uses seed derive_seed(seed, t), so the
/// result is independent of `jobs`.
ForestModel train_forest(const Matrix& X, std::span<const int> y, const ForestParams& params, std::uint64_t seed,
                         std::size_t jobs = 1);

}  // namespace pdm
