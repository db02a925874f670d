#pragma once

// One-vs-rest L2-regularised L1-loss (hinge) linear SVM trained by dual
// coordinate descent with shrinking. The bias is learned as the weight of a
// constant unit feature, so it is regularised along with w.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "hrtfprint/ml/design_matrix.hpp"

namespace hrtfprint::ml {

struct LinearSvmParams {
  double c_reg = 1.0;
  int max_iter = 1000;  // epochs over the data
  double tol = 1e-4;
};

struct LinearSvmModel {
  LinearSvmParams params;
  Matrix<double> weights;  // [n_classes x n_features]
  std::vector<double> biases;
  std::vector<int> iterations;  // per class
  bool converged = true;

  std::size_t n_classes() const { return weights.rows(); }
  std::size_t n_features() const { return weights.cols(); }

  double decision_value(std::size_t c, std::span<const double> x) const {
    const auto w = weights.row(c);
    double s = biases[c];
    for (std::size_t j = 0; j < w.size(); ++j) s += w[j] * x[j];
    return s;
  }

  int predict_one(std::span<const double> x) const {
    int best = 0;
    double best_v = decision_value(0, x);
    for (std::size_t c = 1; c < n_classes(); ++c) {
      const double v = decision_value(c, x);
      if (v > best_v) {
        best_v = v;
        best = static_cast<int>(c);
      }
    }
    return best;
  }
};

namespace detail {

struct BinarySvmResult {
  std::vector<double> w;  // n_features + 1, last entry is the bias
  int iterations = 0;
  bool converged = false;
};

inline BinarySvmResult solve_l2r_l1_svc_dual(const Matrix<double>& x, std::span<const int> y, const LinearSvmParams& p,
                                             std::uint64_t seed) {
  const std::size_t n = x.rows(), f = x.cols();
  BinarySvmResult res;
  res.w.assign(f + 1, 0.0);
  std::vector<double> alpha(n, 0.0), qd(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 1.0;  // bias feature
    for (double v : x.row(i)) s += v * v;
    qd[i] = s;
  }
  std::vector<std::size_t> index(n);
  std::iota(index.begin(), index.end(), 0);
  std::mt19937_64 rng(seed);
  const double upper = p.c_reg;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double pg_max_old = kInf, pg_min_old = -kInf;
  std::size_t active = n;

  auto margin = [&](std::size_t i) {
    const auto row = x.row(i);
    double s = res.w[f];
    for (std::size_t j = 0; j < f; ++j) s += res.w[j] * row[j];
    return s;
  };

  int iter = 0;
  while (iter < p.max_iter) {
    std::shuffle(index.begin(), index.begin() + static_cast<std::ptrdiff_t>(active), rng);
    double pg_max_new = -kInf, pg_min_new = kInf;
    bool updated = false;
    for (std::size_t s = 0; s < active; ++s) {
      const std::size_t i = index[s];
      const double yi = y[i];
      const double g = yi * margin(i) - 1.0;
      double pg = 0.0;
      if (alpha[i] == 0.0) {
        if (g > pg_max_old) {
          --active;
          std::swap(index[s], index[active]);
          --s;
          continue;
        }
        if (g < 0.0) pg = g;
      } else if (alpha[i] == upper) {
        if (g < pg_min_old) {
          --active;
          std::swap(index[s], index[active]);
          --s;
          continue;
        }
        if (g > 0.0) pg = g;
      } else {
        pg = g;
      }
      pg_max_new = std::max(pg_max_new, pg);
      pg_min_new = std::min(pg_min_new, pg);
      if (std::fabs(pg) > 1e-12) {
        updated = true;
        const double old = alpha[i];
        alpha[i] = std::min(std::max(alpha[i] - g / qd[i], 0.0), upper);
        const double delta = (alpha[i] - old) * yi;
        const auto row = x.row(i);
        for (std::size_t j = 0; j < f; ++j) res.w[j] += delta * row[j];
        res.w[f] += delta;
      }
    }
    ++iter;
    // An epoch without a single update means every remaining violation is
    // below the step threshold; a tolerance under that can never be met, so
    // treat it like reaching the tolerance.
    if (pg_max_new - pg_min_new <= p.tol || !updated) {
      if (active == n) {
        res.converged = true;
        break;
      }
      // Re-check the shrunk variables before declaring convergence.
      active = n;
      pg_max_old = kInf;
      pg_min_old = -kInf;
      continue;
    }
    pg_max_old = pg_max_new > 0.0 ? pg_max_new : kInf;
    pg_min_old = pg_min_new < 0.0 ? pg_min_new : -kInf;
  }
  res.iterations = iter;
  return res;
}

}  // namespace detail

// Features are expected to be standardised by the caller.
inline LinearSvmModel train_linear_svm(const DesignMatrix& d, const LinearSvmParams& params = {},
                                       std::uint64_t seed = 0) {
  validate(d);
  if (!(params.c_reg > 0.0) || params.max_iter < 1 || !(params.tol > 0.0))
    throw UsageError("train_linear_svm: bad hyperparameters");
  const std::size_t k = d.n_classes();
  const std::size_t problems = k;
  LinearSvmModel model;
  model.params = params;
  model.weights = Matrix<double>(problems, d.n_features());
  model.biases.assign(problems, 0.0);
  std::vector<int> y(d.n_samples());
  for (std::size_t c = 0; c < problems; ++c) {
    const int positive = static_cast<int>(c);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = d.labels[i] == positive ? 1 : -1;
    auto res = detail::solve_l2r_l1_svc_dual(d.rows, y, params, seed + c);
    for (std::size_t j = 0; j < d.n_features(); ++j) model.weights(c, j) = res.w[j];
    model.biases[c] = res.w[d.n_features()];
    model.iterations.push_back(res.iterations);
    model.converged = model.converged && res.converged;
  }
  return model;
}

}  // namespace hrtfprint::ml
