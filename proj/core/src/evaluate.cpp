#include "pdm/evaluate.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "pdm/error.hpp"
#include "pdm/parallel.hpp"
#include "pdm/rng.hpp"

namespace pdm {

Confusion confusion_matrix(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw SchemaError("label vectors differ in length");
  Confusion c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 1) {
      (predicted[i] == 1 ? c.tp : c.fn)++;
    } else {
      (predicted[i] == 1 ? c.fp : c.tn)++;
    }
  }
  return c;
}

EvalReport metrics_from_confusion(const Confusion& c) {
  EvalReport r;
  r.confusion = c;
  const auto n = static_cast<double>(c.total());
  r.accuracy = n > 0 ? static_cast<double>(c.tp + c.tn) / n : 0.0;
  if (c.tp + c.fp == 0) {
    r.precision_undefined = true;
  } else {
    r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  }
  if (c.tp + c.fn == 0) {
    r.recall_undefined = true;
  } else {
    r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  }
  if (r.precision + r.recall == 0.0) {
    r.f1_undefined = true;
  } else {
    r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
  }
  return r;
}

EvalReport evaluate(const ForestModel& model, const Matrix& X, std::span<const int> y) {
  if (X.rows() == 0) throw EmptyDatasetError("empty test set");
  if (X.cols() != model.n_features) {
    throw SchemaError("test set has " + std::to_string(X.cols()) + " features, model expects " +
                      std::to_string(model.n_features));
  }
  auto report = metrics_from_confusion(confusion_matrix(y, model.predict(X)));
  report.seed = model.seed;
  report.params = model.params;
  return report;
}

EvalReport evaluate(const ForestModel& model, const LabeledDataset& test) { return evaluate(model, test.X, test.y); }

std::vector<GridPoint> ParamGrid::points() const {
  std::vector<GridPoint> out;
  for (auto k : k_neighbors)
    for (auto e : enn_n_neighbors)
      for (auto t : n_trees)
        for (auto d : max_depth) out.push_back({k, e, t, d});
  return out;
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> y, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("need at least 2 folds");
  std::map<int, std::vector<std::size_t>> classes;
  for (std::size_t r = 0; r < y.size(); ++r) classes[y[r]].push_back(r);
  if (classes.size() < 2) throw StratificationError("only one class present");
  std::vector<std::vector<std::size_t>> folds(k);
  for (auto& [label, rows] : classes) {
    if (rows.size() < k) {
      throw StratificationError("class " + std::to_string(label) + " has " + std::to_string(rows.size()) +
                                " rows, fewer than " + std::to_string(k) + " folds");
    }
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(label)));
    rng.shuffle(rows);
    for (std::size_t i = 0; i < rows.size(); ++i) folds[i % k].push_back(rows[i]);
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

GridSearchResult grid_search(const LabeledDataset& train, const ParamGrid& grid, const GridSearchOptions& options,
                             std::uint64_t seed) {
  auto all = grid.points();
  if (all.empty()) throw ValidationError("empty parameter grid");
  std::vector<std::size_t> chosen(all.size());
  std::iota(chosen.begin(), chosen.end(), std::size_t{0});
  if (options.random_samples > 0 && options.random_samples < all.size()) {
    Rng rng(derive_seed(seed, 0x5eed));
    chosen = rng.sample_without_replacement(all.size(), options.random_samples);
    std::sort(chosen.begin(), chosen.end());
  }
  const auto folds = stratified_folds(train.y, options.folds, seed);
  const std::size_t k = folds.size();

  GridSearchResult result;
  result.table.resize(chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    result.table[i].point = all[chosen[i]];
    result.table[i].fold_f1.assign(k, 0.0);
  }
  parallel_for(chosen.size() * k, options.jobs, [&](std::size_t cell) {
    const std::size_t p = cell / k;
    const std::size_t f = cell % k;
    const GridPoint& point = result.table[p].point;
    std::vector<std::size_t> fit_rows;
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) fit_rows.insert(fit_rows.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(fit_rows.begin(), fit_rows.end());
    Matrix X = train.X.select_rows(fit_rows);
    std::vector<int> y;
    for (auto r : fit_rows) y.push_back(train.y[r]);
    if (options.balance) {
      auto balanced = smoteenn(X, y, point.k_neighbors, point.enn_n_neighbors, derive_seed(seed, 1000 + f),
                               train.group, options.smote_ratio);
      X = std::move(balanced.X);
      y = std::move(balanced.y);
    }
    ForestParams params;
    params.n_trees = point.n_trees;
    params.max_depth = point.max_depth;
    params.min_leaf = options.min_leaf;
    const auto model = train_forest(X, y, params, derive_seed(seed, 2000 + f));
    const Matrix X_held = train.X.select_rows(folds[f]);
    std::vector<int> y_held;
    for (auto r : folds[f]) y_held.push_back(train.y[r]);
    result.table[p].fold_f1[f] = evaluate(model, X_held, y_held).f1;
  });
  for (std::size_t p = 0; p < result.table.size(); ++p) {
    auto& row = result.table[p];
    row.mean_f1 = std::accumulate(row.fold_f1.begin(), row.fold_f1.end(), 0.0) / static_cast<double>(k);
    if (p == 0 || row.mean_f1 > result.table[result.best_row].mean_f1) result.best_row = p;
  }
  result.best = result.table[result.best_row].point;
  return result;
}

namespace {

struct SourceFeature {
  std::string name;
  std::vector<std::size_t> columns;
};

std::vector<SourceFeature> source_features(const LabeledDataset& data) {
  std::vector<SourceFeature> out;
  std::map<int, std::size_t> seen;
  for (std::size_t c = 0; c < data.X.cols(); ++c) {
    const int g = c < data.group.size() ? data.group[c] : -1;
    if (g < 0) {
      out.push_back({data.feature_names[c], {c}});
      continue;
    }
    auto [it, inserted] = seen.emplace(g, out.size());
    if (inserted) out.push_back({data.sources[static_cast<std::size_t>(g)], {}});
    out[it->second].columns.push_back(c);
  }
  return out;
}

}  // namespace

std::vector<Importance> permutation_importance(const ForestModel& model, const LabeledDataset& test,
                                               std::size_t n_repeats, std::uint64_t seed, std::size_t jobs) {
  if (test.rows() < 2) throw InsufficientDataError("permutation importance needs at least 2 rows");
  if (n_repeats == 0) throw ValidationError("n_repeats must be positive");
  const double base = evaluate(model, test).f1;
  const auto sources = source_features(test);
  std::vector<double> drops(sources.size() * n_repeats, 0.0);
  parallel_for(drops.size(), jobs, [&](std::size_t cell) {
    const std::size_t s = cell / n_repeats;
    Rng rng(derive_seed(seed, cell));
    std::vector<std::size_t> perm(test.rows());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    rng.shuffle(perm);
    Matrix X = test.X;
    for (auto c : sources[s].columns) {
      for (std::size_t r = 0; r < X.rows(); ++r) X(r, c) = test.X(perm[r], c);
    }
    drops[cell] = base - evaluate(model, X, test.y).f1;
  });
  std::vector<Importance> out;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    double sum = 0.0;
    for (std::size_t r = 0; r < n_repeats; ++r) sum += drops[s * n_repeats + r];
    out.push_back({sources[s].name, sum / static_cast<double>(n_repeats)});
  }
  std::stable_sort(out.begin(), out.end(), [](const Importance& a, const Importance& b) {
    if (a.mean_drop != b.mean_drop) return a.mean_drop > b.mean_drop;
    return a.feature < b.feature;
  });
  return out;
}

}  // namespace pdm
