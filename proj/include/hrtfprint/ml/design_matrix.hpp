#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hrtfprint/error.hpp"
#include "hrtfprint/matrix.hpp"

namespace hrtfprint::ml {

// Classifier input: one row per example, a class label and a group id per
// row. Rows sharing a group must never be split across train and test.
struct DesignMatrix {
  Matrix<double> rows;
  std::vector<int> labels;
  std::vector<int> groups;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;

  std::size_t n_samples() const { return rows.rows(); }
  std::size_t n_features() const { return rows.cols(); }
  std::size_t n_classes() const {
    if (!class_names.empty()) return class_names.size();
    int m = -1;
    for (int l : labels) m = std::max(m, l);
    return static_cast<std::size_t>(m + 1);
  }

  DesignMatrix subset(std::span<const std::size_t> idx) const {
    DesignMatrix out;
    out.feature_names = feature_names;
    out.class_names = class_names;
    out.rows = Matrix<double>(0, rows.cols());
    out.rows.data().reserve(idx.size() * rows.cols());
    for (auto i : idx) {
      out.rows.append_row(rows.row(i));
      out.labels.push_back(labels[i]);
      out.groups.push_back(groups.empty() ? static_cast<int>(i) : groups[i]);
    }
    return out;
  }
};

// Checks shapes, label range, finiteness and group purity. With
// require_two_classes the matrix must contain at least two labels.
inline void validate(const DesignMatrix& d, bool require_two_classes = true) {
  const std::size_t n = d.n_samples();
  if (n == 0) throw DataError("design matrix has no rows");
  if (d.labels.size() != n) throw DataError("label count does not match row count");
  if (!d.groups.empty() && d.groups.size() != n) throw DataError("group count does not match row count");
  if (!d.feature_names.empty() && d.feature_names.size() != d.n_features())
    throw DataError("feature name count does not match feature count");
  const auto c = static_cast<int>(d.n_classes());
  std::vector<bool> present(static_cast<std::size_t>(std::max(c, 0)), false);
  for (int l : d.labels) {
    if (l < 0 || l >= c) throw DataError("label out of range");
    present[static_cast<std::size_t>(l)] = true;
  }
  if (require_two_classes && std::count(present.begin(), present.end(), true) < 2)
    throw DataError("design matrix needs at least two classes");
  for (double v : d.rows.data())
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  if (!d.groups.empty()) {
    std::map<int, int> group_label;
    for (std::size_t i = 0; i < n; ++i) {
      auto [it, inserted] = group_label.emplace(d.groups[i], d.labels[i]);
      if (!inserted && it->second != d.labels[i]) throw DataError("group carries more than one label");
    }
  }
}

// Per-feature zero-mean unit-variance scaling fitted on training rows.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix<double>& x) {
    Standardizer s;
    const std::size_t n = x.rows(), f = x.cols();
    s.mean.assign(f, 0.0);
    s.scale.assign(f, 1.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < f; ++c) s.mean[c] += x(r, c);
    for (auto& m : s.mean) m /= static_cast<double>(n);
    std::vector<double> var(f, 0.0);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < f; ++c) {
        const double d = x(r, c) - s.mean[c];
        var[c] += d * d;
      }
    for (std::size_t c = 0; c < f; ++c) {
      const double sd = std::sqrt(var[c] / static_cast<double>(n));
      s.scale[c] = sd > 0.0 ? sd : 1.0;
    }
    return s;
  }

  Matrix<double> apply(const Matrix<double>& x) const {
    Matrix<double> out = x;
    for (std::size_t r = 0; r < out.rows(); ++r)
      for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = (out(r, c) - mean[c]) / scale[c];
    return out;
  }
};

}  // namespace hrtfprint::ml
