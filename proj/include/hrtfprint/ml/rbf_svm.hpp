#pragma once

// One-vs-rest C-SVM with an RBF kernel k(x, z) = exp(-gamma |x - z|^2),
// solved by SMO with second-order working-set selection. The kernel matrix
// is computed once and shared by all one-vs-rest problems.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "hrtfprint/ml/design_matrix.hpp"

namespace hrtfprint::ml {

struct RbfSvmParams {
  double c_reg = 1.0;
  double gamma = 0.0;  // <= 0 selects 1 / (n_features * mean feature variance)
  double tol = 1e-3;   // maximal KKT violation at termination
  long max_iter = 10'000'000;
};

struct KernelSvmModel {
  RbfSvmParams params;
  double gamma = 0.0;
  Matrix<double> support_vectors;   // union over all one-vs-rest problems
  Matrix<double> dual_coef;         // [n_classes x n_support], alpha_i * y_i
  std::vector<double> rho;          // decision = sum coef * k - rho
  std::vector<long> iterations;
  bool converged = true;

  std::size_t n_classes() const { return dual_coef.rows(); }

  std::vector<double> decision_values(std::span<const double> x) const {
    const std::size_t n_sv = support_vectors.rows();
    std::vector<double> k(n_sv);
    for (std::size_t s = 0; s < n_sv; ++s) {
      const auto sv = support_vectors.row(s);
      double d2 = 0.0;
      for (std::size_t j = 0; j < sv.size(); ++j) {
        const double diff = sv[j] - x[j];
        d2 += diff * diff;
      }
      k[s] = std::exp(-gamma * d2);
    }
    std::vector<double> out(n_classes());
    for (std::size_t c = 0; c < n_classes(); ++c) {
      double acc = -rho[c];
      const auto coef = dual_coef.row(c);
      for (std::size_t s = 0; s < n_sv; ++s) acc += coef[s] * k[s];
      out[c] = acc;
    }
    return out;
  }

  int predict_one(std::span<const double> x) const {
    const auto v = decision_values(x);
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
  }
};

inline double auto_gamma(const Matrix<double>& x) {
  const std::size_t n = x.rows(), f = x.cols();
  double var_sum = 0.0;
  for (std::size_t c = 0; c < f; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += x(r, c);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (x(r, c) - mean) * (x(r, c) - mean);
    var_sum += var / static_cast<double>(n);
  }
  const double mean_var = var_sum / static_cast<double>(f);
  return mean_var > 0.0 ? 1.0 / (static_cast<double>(f) * mean_var) : 1.0 / static_cast<double>(f);
}

namespace detail {

struct SmoResult {
  std::vector<double> alpha;
  double rho = 0.0;
  long iterations = 0;
  bool converged = false;
};

// Solves min 1/2 a'Qa - e'a, 0 <= a <= C, y'a = 0 with Q_ij = y_i y_j K_ij.
inline SmoResult smo_solve(const Matrix<double>& kernel, std::span<const int> y, double c_reg, double tol,
                           long max_iter) {
  const std::size_t n = y.size();
  constexpr double kTau = 1e-12;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  SmoResult res;
  res.alpha.assign(n, 0.0);
  auto& a = res.alpha;
  std::vector<double> grad(n, -1.0);
  auto q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * kernel(i, j); };

  long iter = 0;
  for (; iter < max_iter; ++iter) {
    // Working set: i maximises -y G over I_up; j minimises the second-order
    // objective decrease over I_low.
    double g_max = -kInf;
    std::ptrdiff_t i_sel = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] == 1) {
        if (a[t] < c_reg && -grad[t] >= g_max) {
          g_max = -grad[t];
          i_sel = static_cast<std::ptrdiff_t>(t);
        }
      } else if (a[t] > 0.0 && grad[t] >= g_max) {
        g_max = grad[t];
        i_sel = static_cast<std::ptrdiff_t>(t);
      }
    }
    double g_max2 = -kInf, obj_min = kInf;
    std::ptrdiff_t j_sel = -1;
    if (i_sel >= 0) {
      const auto i = static_cast<std::size_t>(i_sel);
      for (std::size_t t = 0; t < n; ++t) {
        if (y[t] == 1) {
          if (a[t] > 0.0) {
            const double diff = g_max + grad[t];
            g_max2 = std::max(g_max2, grad[t]);
            if (diff > 0.0) {
              double quad = kernel(i, i) + kernel(t, t) - 2.0 * y[i] * q(i, t);
              if (quad <= 0.0) quad = kTau;
              const double obj = -(diff * diff) / quad;
              if (obj <= obj_min) {
                obj_min = obj;
                j_sel = static_cast<std::ptrdiff_t>(t);
              }
            }
          }
        } else if (a[t] < c_reg) {
          const double diff = g_max - grad[t];
          g_max2 = std::max(g_max2, -grad[t]);
          if (diff > 0.0) {
            double quad = kernel(i, i) + kernel(t, t) + 2.0 * y[i] * q(i, t);
            if (quad <= 0.0) quad = kTau;
            const double obj = -(diff * diff) / quad;
            if (obj <= obj_min) {
              obj_min = obj;
              j_sel = static_cast<std::ptrdiff_t>(t);
            }
          }
        }
      }
    }
    if (i_sel < 0 || j_sel < 0 || g_max + g_max2 < tol) {
      res.converged = true;
      break;
    }
    const auto i = static_cast<std::size_t>(i_sel), j = static_cast<std::size_t>(j_sel);
    const double old_ai = a[i], old_aj = a[j];
    const double c = c_reg;
    if (y[i] != y[j]) {
      double quad = kernel(i, i) + kernel(j, j) + 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0.0) {
        if (a[j] < 0.0) {
          a[j] = 0.0;
          a[i] = diff;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = -diff;
      }
      if (diff > 0.0) {
        if (a[i] > c) {
          a[i] = c;
          a[j] = c - diff;
        }
      } else if (a[j] > c) {
        a[j] = c;
        a[i] = c + diff;
      }
    } else {
      double quad = kernel(i, i) + kernel(j, j) - 2.0 * q(i, j);
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > c) {
        if (a[i] > c) {
          a[i] = c;
          a[j] = sum - c;
        }
      } else if (a[j] < 0.0) {
        a[j] = 0.0;
        a[i] = sum;
      }
      if (sum > c) {
        if (a[j] > c) {
          a[j] = c;
          a[i] = sum - c;
        }
      } else if (a[i] < 0.0) {
        a[i] = 0.0;
        a[j] = sum;
      }
    }
    const double dai = a[i] - old_ai, daj = a[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q(i, t) * dai + q(j, t) * daj;
  }
  res.iterations = iter;

  double ub = kInf, lb = -kInf, sum_free = 0.0;
  long n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (a[t] >= c_reg) {
      if (y[t] == -1)
        ub = std::min(ub, yg);
      else
        lb = std::max(lb, yg);
    } else if (a[t] <= 0.0) {
      if (y[t] == 1)
        ub = std::min(ub, yg);
      else
        lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  res.rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  return res;
}

inline Matrix<double> rbf_kernel_matrix(const Matrix<double>& x, double gamma) {
  const std::size_t n = x.rows();
  std::vector<double> sq(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (double v : x.row(i)) sq[i] += v * v;
  Matrix<double> k(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    const auto xi = x.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto xj = x.row(j);
      double d2 = 0.0;
      for (std::size_t f = 0; f < xi.size(); ++f) {
        const double diff = xi[f] - xj[f];
        d2 += diff * diff;
      }
      k(i, j) = k(j, i) = std::exp(-gamma * d2);
    }
  }
  return k;
}

}  // namespace detail

// Features are expected to be standardised by the caller.
inline KernelSvmModel train_rbf_svm(const DesignMatrix& d, const RbfSvmParams& params = {}, std::uint64_t seed = 0) {
  (void)seed;  // SMO working-set selection is deterministic
  validate(d);
  if (!(params.c_reg > 0.0) || !(params.tol > 0.0)) throw UsageError("train_rbf_svm: bad hyperparameters");
  const std::size_t n = d.n_samples(), k = d.n_classes();
  KernelSvmModel model;
  model.params = params;
  model.gamma = params.gamma > 0.0 ? params.gamma : auto_gamma(d.rows);
  const auto kernel = detail::rbf_kernel_matrix(d.rows, model.gamma);

  Matrix<double> coef_all(k, n, 0.0);
  std::vector<int> y(n);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < n; ++i) y[i] = d.labels[i] == static_cast<int>(c) ? 1 : -1;
    auto res = detail::smo_solve(kernel, y, params.c_reg, params.tol, params.max_iter);
    for (std::size_t i = 0; i < n; ++i) coef_all(c, i) = res.alpha[i] * y[i];
    model.rho.push_back(res.rho);
    model.iterations.push_back(res.iterations);
    model.converged = model.converged && res.converged;
  }
  std::vector<std::size_t> sv;
  for (std::size_t i = 0; i < n; ++i) {
    bool used = false;
    for (std::size_t c = 0; c < k && !used; ++c) used = coef_all(c, i) != 0.0;
    if (used) sv.push_back(i);
  }
  model.support_vectors = Matrix<double>(0, d.n_features());
  model.dual_coef = Matrix<double>(k, sv.size());
  for (std::size_t s = 0; s < sv.size(); ++s) {
    model.support_vectors.append_row(d.rows.row(sv[s]));
    for (std::size_t c = 0; c < k; ++c) model.dual_coef(c, s) = coef_all(c, sv[s]);
  }
  return model;
}

}  // namespace hrtfprint::ml
