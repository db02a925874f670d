#pragma once

// Grouped, class-stratified k-fold splitting and the evaluation metrics
// computed on the pooled held-out predictions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "hrtfprint/error.hpp"
#include "hrtfprint/matrix.hpp"

namespace hrtfprint::ml {

using Fold = std::vector<std::size_t>;  // test row indices, ascending

// Assigns whole groups to k folds. Groups are shuffled with `seed` and
// visited class by class; each goes to the fold holding the fewest rows of
// its class so far, ties to the fold with fewer rows overall, then the
// lower fold id.
inline std::vector<Fold> grouped_kfold(std::span<const int> groups, std::span<const int> labels, int k,
                                       std::uint64_t seed) {
  if (k < 2) throw UsageError("grouped_kfold: need k >= 2");
  if (groups.size() != labels.size()) throw DataError("grouped_kfold: groups and labels differ in length");

  struct GroupInfo {
    int id;
    int label;
    std::vector<std::size_t> rows;
  };
  std::vector<GroupInfo> info;
  std::map<int, std::size_t> slot;
  int max_label = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    auto [it, inserted] = slot.emplace(groups[i], info.size());
    if (inserted) info.push_back({groups[i], labels[i], {}});
    auto& g = info[it->second];
    if (g.label != labels[i]) throw DataError("grouped_kfold: group carries more than one label");
    g.rows.push_back(i);
    max_label = std::max(max_label, labels[i]);
  }
  if (info.size() < static_cast<std::size_t>(k))
    throw DataError("grouped_kfold: fewer groups (" + std::to_string(info.size()) + ") than folds (" +
                    std::to_string(k) + ")");

  std::mt19937_64 rng(seed);
  std::shuffle(info.begin(), info.end(), rng);
  // Visit one class at a time (shuffled order within the class) so each
  // class's remainder lands on the currently smallest folds.
  std::stable_sort(info.begin(), info.end(), [](const GroupInfo& a, const GroupInfo& b) { return a.label < b.label; });

  const auto n_folds = static_cast<std::size_t>(k);
  Matrix<std::size_t> class_count(n_folds, static_cast<std::size_t>(max_label) + 1, 0);
  std::vector<std::size_t> fold_size(n_folds, 0);
  std::vector<Fold> folds(n_folds);
  for (const auto& g : info) {
    const auto c = static_cast<std::size_t>(g.label);
    std::size_t best = 0;
    for (std::size_t f = 1; f < n_folds; ++f) {
      if (class_count(f, c) < class_count(best, c) ||
          (class_count(f, c) == class_count(best, c) && fold_size[f] < fold_size[best]))
        best = f;
    }
    class_count(best, c) += g.rows.size();
    fold_size[best] += g.rows.size();
    folds[best].insert(folds[best].end(), g.rows.begin(), g.rows.end());
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

// Complement of a test fold within [0, n).
inline std::vector<std::size_t> training_rows(const Fold& test, std::size_t n) {
  std::vector<std::size_t> out;
  out.reserve(n - test.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (j < test.size() && test[j] == i) {
      ++j;
      continue;
    }
    out.push_back(i);
  }
  return out;
}

inline double accuracy(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.empty()) throw UsageError("accuracy: empty input");
  if (y_true.size() != y_pred.size()) throw UsageError("accuracy: length mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_true.size(); ++i) hits += y_true[i] == y_pred[i];
  return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

// Rows are true classes, columns predicted classes.
inline Matrix<long> confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, std::size_t n_classes) {
  if (y_true.size() != y_pred.size()) throw UsageError("confusion_matrix: length mismatch");
  Matrix<long> m(n_classes, n_classes, 0);
  const auto c = static_cast<int>(n_classes);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i] < 0 || y_true[i] >= c || y_pred[i] < 0 || y_pred[i] >= c)
      throw DataError("confusion_matrix: label out of range");
    m(static_cast<std::size_t>(y_true[i]), static_cast<std::size_t>(y_pred[i])) += 1;
  }
  return m;
}

struct ChanceInterval {
  double lo = 0.0;  // accuracy fractions
  double hi = 1.0;
  std::size_t lo_count = 0;
  std::size_t hi_count = 0;
  bool contains(double acc) const { return acc >= lo - 1e-12 && acc <= hi + 1e-12; }
};

// Exact central binomial interval for the number of correct guesses among
// n trials at success probability p: the largest lo and smallest hi with
// P(X < lo) <= alpha/2 and P(X > hi) <= alpha/2.
inline ChanceInterval chance_interval(std::size_t n, double p, double alpha = 0.05) {
  if (n == 0) throw UsageError("chance_interval: n must be positive");
  std::vector<double> pmf(n + 1);
  const double ln_p = std::log(p), ln_q = std::log1p(-p);
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k <= n; ++k) {
    const double kk = static_cast<double>(k);
    pmf[k] = std::exp(std::lgamma(nn + 1) - std::lgamma(kk + 1) - std::lgamma(nn - kk + 1) + kk * ln_p + (nn - kk) * ln_q);
  }
  ChanceInterval ci;
  double lower_tail = 0.0;
  std::size_t lo = 0;
  while (lo <= n && lower_tail + pmf[lo] <= alpha / 2) lower_tail += pmf[lo++];
  double upper_tail = 0.0;
  std::size_t hi = n;
  while (hi > 0 && upper_tail + pmf[hi] <= alpha / 2) upper_tail += pmf[hi--];
  ci.lo_count = lo;
  ci.hi_count = hi;
  ci.lo = static_cast<double>(lo) / nn;
  ci.hi = static_cast<double>(hi) / nn;
  return ci;
}

}  // namespace hrtfprint::ml
