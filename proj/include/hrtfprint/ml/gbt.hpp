#pragma once

// Multiclass gradient boosting on softmax cross-entropy. Each round fits
// one depth-limited least-squares regression tree per class to the
// residual (one-hot minus softmax), sets leaf values by a Newton step and
// shrinks them by the learning rate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "hrtfprint/ml/cart.hpp"
#include "hrtfprint/ml/design_matrix.hpp"

namespace hrtfprint::ml {

struct GbtParams {
  int n_rounds = 200;
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_samples_leaf = 1;
};

struct RegressionNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<RegressionNode> nodes;

  double predict(std::span<const double> x) const {
    const RegressionNode* node = &nodes[0];
    while (node->feature >= 0)
      node = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left
                                                                                                         : node->right)];
    return node->value;
  }
};

struct GbtModel {
  GbtParams params;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::vector<double> initial_scores;              // log class priors
  std::vector<std::vector<RegressionTree>> rounds;  // [round][class]
  std::vector<double> step_scale;                  // per round, 1 unless the loss guard backed off
  std::vector<double> importance_raw;              // squared-error reduction per feature
  std::vector<double> training_loss;               // after initialisation, then after each round

  std::vector<double> decision_scores(std::span<const double> x) const {
    std::vector<double> s = initial_scores;
    for (const auto& trees : rounds)
      for (std::size_t c = 0; c < n_classes; ++c) s[c] += trees[c].predict(x);
    return s;
  }

  std::vector<double> predict_proba(std::span<const double> x) const {
    auto s = decision_scores(x);
    const double m = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (auto& v : s) z += (v = std::exp(v - m));
    for (auto& v : s) v /= z;
    return s;
  }

  int predict_one(std::span<const double> x) const {
    const auto s = decision_scores(x);
    return static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
  }
};

namespace detail {

inline void softmax_rows(const std::vector<double>& scores, std::size_t n_classes, std::vector<double>& proba) {
  proba.resize(scores.size());
  const std::size_t n = scores.size() / n_classes;
  for (std::size_t i = 0; i < n; ++i) {
    const double* s = &scores[i * n_classes];
    double* p = &proba[i * n_classes];
    const double m = *std::max_element(s, s + n_classes);
    double z = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) z += (p[c] = std::exp(s[c] - m));
    for (std::size_t c = 0; c < n_classes; ++c) p[c] /= z;
  }
}

inline double cross_entropy(const std::vector<double>& scores, std::span<const int> labels, std::size_t n_classes) {
  double loss = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double* s = &scores[i * n_classes];
    const double m = *std::max_element(s, s + n_classes);
    double z = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) z += std::exp(s[c] - m);
    loss += m + std::log(z) - s[static_cast<std::size_t>(labels[i])];
  }
  return loss / static_cast<double>(labels.size());
}

// Feature columns presorted once per training run; trees only change which
// node each row belongs to.
struct SortedColumns {
  std::size_t n_rows = 0;
  std::size_t n_features = 0;
  std::vector<std::uint32_t> order;  // [feature][rank] -> row
  std::vector<double> values;        // [feature][rank] -> value

  explicit SortedColumns(const Matrix<double>& x) : n_rows(x.rows()), n_features(x.cols()) {
    order.resize(n_rows * n_features);
    values.resize(n_rows * n_features);
    std::vector<std::uint32_t> idx(n_rows);
    for (std::size_t f = 0; f < n_features; ++f) {
      std::iota(idx.begin(), idx.end(), 0u);
      std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x(a, f) < x(b, f); });
      for (std::size_t r = 0; r < n_rows; ++r) {
        order[f * n_rows + r] = idx[r];
        values[f * n_rows + r] = x(idx[r], f);
      }
    }
  }
};

struct LevelNodeStats {
  double sum = 0.0;
  std::int64_t count = 0;
  // Running scan state.
  double left_sum = 0.0;
  std::int64_t left_count = 0;
  double last_value = 0.0;
  // Best split so far.
  double best_gain = 0.0;
  int best_feature = -1;
  double best_threshold = 0.0;
};

// Fits one least-squares tree to `target` and writes each training row's
// leaf id into `leaf_of`. Leaf values are filled in by the caller.
inline RegressionTree fit_regression_tree(const SortedColumns& cols, std::span<const double> target, int max_depth,
                                          int min_samples_leaf, std::vector<int>& leaf_of,
                                          std::vector<double>& importance) {
  const std::size_t n = cols.n_rows;
  RegressionTree tree;
  tree.nodes.emplace_back();
  leaf_of.assign(n, 0);
  // Rows whose node is still splittable carry that node id; others -1.
  std::vector<int> active_node(n, 0);
  std::vector<int> frontier{0};

  for (int depth = 0; depth < max_depth && !frontier.empty(); ++depth) {
    std::vector<LevelNodeStats> stats(tree.nodes.size());
    for (std::size_t i = 0; i < n; ++i) {
      const int v = active_node[i];
      if (v < 0) continue;
      stats[static_cast<std::size_t>(v)].sum += target[i];
      stats[static_cast<std::size_t>(v)].count += 1;
    }
    for (std::size_t f = 0; f < cols.n_features; ++f) {
      for (int v : frontier) {
        auto& s = stats[static_cast<std::size_t>(v)];
        s.left_sum = 0.0;
        s.left_count = 0;
      }
      const std::uint32_t* order = &cols.order[f * n];
      const double* values = &cols.values[f * n];
      for (std::size_t r = 0; r < n; ++r) {
        const std::uint32_t row = order[r];
        const int v = active_node[row];
        if (v < 0) continue;
        auto& s = stats[static_cast<std::size_t>(v)];
        const double x = values[r];
        if (s.left_count >= min_samples_leaf && x != s.last_value && s.count - s.left_count >= min_samples_leaf) {
          const double rs = s.sum - s.left_sum;
          const auto nl = static_cast<double>(s.left_count), nr = static_cast<double>(s.count - s.left_count);
          const double gain = s.left_sum * s.left_sum / nl + rs * rs / nr - s.sum * s.sum / static_cast<double>(s.count);
          if (gain > s.best_gain) {
            s.best_gain = gain;
            s.best_feature = static_cast<int>(f);
            s.best_threshold = split_midpoint(s.last_value, x);
          }
        }
        s.left_sum += target[row];
        s.left_count += 1;
        s.last_value = x;
      }
    }
    std::vector<int> next;
    std::vector<int> remap(tree.nodes.size(), -1);  // parent -> left child id
    for (int v : frontier) {
      auto& s = stats[static_cast<std::size_t>(v)];
      if (s.best_feature < 0 || !(s.best_gain > 1e-12 * std::max(1.0, s.sum * s.sum / static_cast<double>(s.count))))
        continue;
      const int l = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[static_cast<std::size_t>(v)];
      node.feature = s.best_feature;
      node.threshold = s.best_threshold;
      node.left = l;
      node.right = l + 1;
      importance[static_cast<std::size_t>(s.best_feature)] += s.best_gain;
      remap[static_cast<std::size_t>(v)] = l;
      next.push_back(l);
      next.push_back(l + 1);
    }
    if (next.empty()) break;
    // Rows of split nodes go to the left child first, then the split
    // feature's sorted column moves those above the threshold right.
    for (std::size_t i = 0; i < n; ++i) {
      const int v = active_node[i];
      if (v >= 0) active_node[i] = remap[static_cast<std::size_t>(v)];
    }
    for (int v : frontier) {
      const int l = remap[static_cast<std::size_t>(v)];
      if (l < 0) continue;
      const auto& node = tree.nodes[static_cast<std::size_t>(v)];
      const std::uint32_t* order = &cols.order[static_cast<std::size_t>(node.feature) * n];
      const double* values = &cols.values[static_cast<std::size_t>(node.feature) * n];
      for (std::size_t r = 0; r < n; ++r) {
        const std::uint32_t row = order[r];
        if (active_node[row] == l && values[r] > node.threshold) active_node[row] = l + 1;
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      if (active_node[i] >= 0) leaf_of[i] = active_node[i];
    frontier = std::move(next);
  }
  // Rows retired earlier already hold their final leaf in leaf_of.
  return tree;
}

}  // namespace detail

inline GbtModel train_gbt(const DesignMatrix& d, const GbtParams& params = {}, std::uint64_t seed = 0) {
  (void)seed;  // deterministic: no subsampling
  validate(d, /*require_two_classes=*/false);
  if (params.n_rounds < 0 || params.max_depth < 1 || !(params.learning_rate > 0.0))
    throw UsageError("train_gbt: bad hyperparameters");
  const std::size_t n = d.n_samples(), k = d.n_classes();
  GbtModel model;
  model.params = params;
  model.n_features = d.n_features();
  model.n_classes = k;
  model.importance_raw.assign(model.n_features, 0.0);

  std::vector<double> prior(k, 0.0);
  for (int l : d.labels) prior[static_cast<std::size_t>(l)] += 1.0;
  for (auto& p : prior) p = std::log(std::max(p / static_cast<double>(n), 1e-12));
  model.initial_scores = prior;

  std::vector<double> scores(n * k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < k; ++c) scores[i * k + c] = prior[c];
  double loss = detail::cross_entropy(scores, d.labels, k);
  model.training_loss.push_back(loss);
  if (params.n_rounds == 0) return model;

  const detail::SortedColumns cols(d.rows);
  std::vector<double> proba, residual(n), candidate(n * k);
  std::vector<std::vector<int>> leaf_of(k);
  const double newton_factor = static_cast<double>(k - 1) / static_cast<double>(k);

  for (int round = 0; round < params.n_rounds; ++round) {
    detail::softmax_rows(scores, k, proba);
    std::vector<RegressionTree> trees(k);
    std::vector<double> round_importance(model.n_features, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      for (std::size_t i = 0; i < n; ++i)
        residual[i] = (d.labels[i] == static_cast<int>(c) ? 1.0 : 0.0) - proba[i * k + c];
      trees[c] = detail::fit_regression_tree(cols, residual, params.max_depth, params.min_samples_leaf, leaf_of[c],
                                             round_importance);
      // Newton step per leaf: (K-1)/K * sum(r) / sum(p (1 - p)).
      std::vector<double> num(trees[c].nodes.size(), 0.0), den(trees[c].nodes.size(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const auto leaf = static_cast<std::size_t>(leaf_of[c][i]);
        const double p = proba[i * k + c];
        num[leaf] += residual[i];
        den[leaf] += p * (1.0 - p);
      }
      for (std::size_t v = 0; v < trees[c].nodes.size(); ++v) {
        auto& node = trees[c].nodes[v];
        if (node.feature >= 0) continue;
        node.value = den[v] > 1e-12 ? newton_factor * num[v] / den[v] : 0.0;
      }
    }

    // Shrink by the learning rate; halve further if the training loss would
    // rise, and drop the round entirely if no step helps.
    double scale = params.learning_rate;
    double new_loss = loss;
    bool accepted = false;
    for (int attempt = 0; attempt < 40; ++attempt, scale *= 0.5) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c)
          candidate[i * k + c] =
              scores[i * k + c] + scale * trees[c].nodes[static_cast<std::size_t>(leaf_of[c][i])].value;
      new_loss = detail::cross_entropy(candidate, d.labels, k);
      if (new_loss <= loss) {
        accepted = true;
        break;
      }
    }
    if (!accepted) scale = 0.0;
    for (auto& tree : trees)
      for (auto& node : tree.nodes) node.value *= scale;
    if (accepted) {
      scores.swap(candidate);
      loss = new_loss;
      for (std::size_t f = 0; f < model.n_features; ++f) model.importance_raw[f] += round_importance[f];
    }
    model.rounds.push_back(std::move(trees));
    model.step_scale.push_back(scale / params.learning_rate);
    model.training_loss.push_back(loss);
  }
  return model;
}

inline std::vector<double> feature_importance(const GbtModel& model) {
  std::vector<double> imp = model.importance_raw;
  const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
  if (total > 0.0)
    for (auto& v : imp) v /= total;
  else
    std::fill(imp.begin(), imp.end(), 0.0);
  return imp;
}

}  // namespace hrtfprint::ml
