#pragma once

// CART classification tree: greedy binary splits minimising weighted Gini
// impurity with an exhaustive search over every feature and every midpoint
// between consecutive distinct values.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "hrtfprint/ml/design_matrix.hpp"

namespace hrtfprint::ml {

struct CartParams {
  int max_depth = 12;
  int min_samples_leaf = 1;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> proba;  // leaves only
  double impurity_decrease = 0.0;
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  CartParams params;
  std::size_t n_features = 0;
  std::size_t n_classes = 0;

  const TreeNode& leaf_for(std::span<const double> x) const {
    const TreeNode* node = &nodes[0];
    while (node->feature >= 0)
      node = &nodes[static_cast<std::size_t>(x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left
                                                                                                         : node->right)];
    return *node;
  }

  int predict_one(std::span<const double> x) const {
    const auto& p = leaf_for(x).proba;
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
  }
};

// Threshold strictly between a < b that sends a left and b right.
inline double split_midpoint(double a, double b) {
  const double mid = a + (b - a) / 2.0;
  return mid < b ? mid : a;
}

namespace detail {

// Purity score sum_c count_c^2 / n of one side, kept as an exact fraction.
struct SideScore {
  std::int64_t sq = 0;  // sum of squared class counts
  std::int64_t n = 0;
};

// True when left+right purity of `a` beats `b`; equivalent to lower
// weighted Gini because n - purity is the weighted impurity.
inline bool purer(const SideScore& al, const SideScore& ar, const SideScore& bl, const SideScore& br) {
  using i128 = __int128;
  const i128 num_a = static_cast<i128>(al.sq) * ar.n + static_cast<i128>(ar.sq) * al.n;
  const i128 den_a = static_cast<i128>(al.n) * ar.n;
  const i128 num_b = static_cast<i128>(bl.sq) * br.n + static_cast<i128>(br.sq) * bl.n;
  const i128 den_b = static_cast<i128>(bl.n) * br.n;
  return num_a * den_b > num_b * den_a;
}

inline double gini_weighted(const std::vector<std::int64_t>& counts, std::int64_t n) {
  if (n == 0) return 0.0;
  double sq = 0.0;
  for (auto c : counts) sq += static_cast<double>(c) * static_cast<double>(c);
  return static_cast<double>(n) - sq / static_cast<double>(n);
}

struct CartBuilder {
  const DesignMatrix& d;
  CartParams params;
  std::size_t n_classes;
  TreeModel& model;

  int build(std::vector<std::size_t>& idx, int depth) {
    std::vector<std::int64_t> counts(n_classes, 0);
    for (auto i : idx) ++counts[static_cast<std::size_t>(d.labels[i])];
    const auto n = static_cast<std::int64_t>(idx.size());
    const int node_id = static_cast<int>(model.nodes.size());
    model.nodes.emplace_back();
    {
      auto& node = model.nodes.back();
      node.proba.resize(n_classes);
      for (std::size_t c = 0; c < n_classes; ++c) node.proba[c] = static_cast<double>(counts[c]) / static_cast<double>(n);
    }
    const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
    if (pure || depth >= params.max_depth || n < 2 * params.min_samples_leaf) return node_id;

    const std::size_t n_features = d.n_features();
    bool found = false;
    int best_feature = -1;
    double best_threshold = 0.0;
    SideScore best_l, best_r;
    std::vector<std::size_t> order(idx);
    std::vector<std::int64_t> left(n_classes);
    for (std::size_t f = 0; f < n_features; ++f) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = d.rows(a, f), vb = d.rows(b, f);
        return va < vb || (va == vb && a < b);
      });
      std::fill(left.begin(), left.end(), 0);
      std::int64_t sq_left = 0, sq_right = 0;
      for (auto c : counts) sq_right += c * c;
      for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
        const auto c = static_cast<std::size_t>(d.labels[order[pos]]);
        // Moving one example of class c from right to left.
        const std::int64_t r_before = counts[c] - left[c];
        sq_right += (r_before - 1) * (r_before - 1) - r_before * r_before;
        sq_left += (left[c] + 1) * (left[c] + 1) - left[c] * left[c];
        ++left[c];
        const double v = d.rows(order[pos], f), v_next = d.rows(order[pos + 1], f);
        if (v == v_next) continue;
        const auto n_left = static_cast<std::int64_t>(pos + 1);
        if (n_left < params.min_samples_leaf || n - n_left < params.min_samples_leaf) continue;
        const SideScore sl{sq_left, n_left}, sr{sq_right, n - n_left};
        // Scanning features and thresholds in ascending order, a strict
        // improvement keeps the lowest feature index and threshold on ties.
        if (!found || purer(sl, sr, best_l, best_r)) {
          found = true;
          best_feature = static_cast<int>(f);
          best_threshold = split_midpoint(v, v_next);
          best_l = sl;
          best_r = sr;
        }
      }
    }
    if (!found) return node_id;

    std::vector<std::size_t> left_idx, right_idx;
    std::vector<std::int64_t> lc(n_classes, 0), rc(n_classes, 0);
    for (auto i : idx) {
      if (d.rows(i, static_cast<std::size_t>(best_feature)) <= best_threshold) {
        left_idx.push_back(i);
        ++lc[static_cast<std::size_t>(d.labels[i])];
      } else {
        right_idx.push_back(i);
        ++rc[static_cast<std::size_t>(d.labels[i])];
      }
    }
    const double decrease = gini_weighted(counts, n) - gini_weighted(lc, best_l.n) - gini_weighted(rc, best_r.n);
    idx.clear();
    idx.shrink_to_fit();
    const int l = build(left_idx, depth + 1);
    const int r = build(right_idx, depth + 1);
    auto& node = model.nodes[static_cast<std::size_t>(node_id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    node.impurity_decrease = std::max(0.0, decrease);
    node.proba.clear();
    return node_id;
  }
};

}  // namespace detail

// `seed` is accepted for interface symmetry with the other trainers; the
// exhaustive search has no random component.
inline TreeModel train_cart(const DesignMatrix& d, const CartParams& params = {}, std::uint64_t seed = 0) {
  (void)seed;
  validate(d, /*require_two_classes=*/false);
  if (params.max_depth < 0 || params.min_samples_leaf < 1) throw UsageError("train_cart: bad hyperparameters");
  TreeModel model;
  model.params = params;
  model.n_features = d.n_features();
  model.n_classes = d.n_classes();
  std::vector<std::size_t> idx(d.n_samples());
  std::iota(idx.begin(), idx.end(), 0);
  detail::CartBuilder builder{d, params, model.n_classes, model};
  builder.build(idx, 0);
  return model;
}

inline std::vector<double> feature_importance(const TreeModel& model) {
  std::vector<double> imp(model.n_features, 0.0);
  for (const auto& node : model.nodes)
    if (node.feature >= 0) imp[static_cast<std::size_t>(node.feature)] += node.impurity_decrease;
  const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
  if (total > 0.0)
    for (auto& v : imp) v /= total;
  return imp;
}

}  // namespace hrtfprint::ml
