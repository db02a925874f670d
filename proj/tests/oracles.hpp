#pragma once

// Independent reference computations shared by the unit suites and the
// acceptance driver. Everything here is brute force or closed form.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hrtfprint/corpus.hpp"
#include "hrtfprint/matrix.hpp"
#include "hrtfprint/ml/design_matrix.hpp"
#include "test_util.hpp"

namespace hrtfprint::testing {

// ---------------------------------------------------------------- signals

inline std::vector<double> random_signal(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> nd;
  std::vector<double> x(n);
  for (auto& v : x) v = nd(rng);
  return x;
}

inline std::vector<double> sine(double f, double fs, std::size_t n, double amp = 1.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs);
  return x;
}

inline double db(double ratio) { return 20.0 * std::log10(ratio); }

// Largest |X_a[k]| - |X_b[k]| relative to the peak of |X_a|, both spectra
// taken with the reference DFT.
inline double peak_relative_magnitude_deviation(const std::vector<double>& a, const std::vector<double>& b) {
  const auto fa = naive_dft(a);
  const auto fb = naive_dft(b);
  double peak = 0.0, dev = 0.0;
  for (std::size_t k = 0; k < fa.size(); ++k) {
    peak = std::max(peak, std::abs(fa[k]));
    dev = std::max(dev, std::fabs(std::abs(fa[k]) - std::abs(fb[k])));
  }
  return dev / peak;
}

// Both ears on the 12-position ring, filled with decaying noise.
inline HrirCorpus random_corpus(std::size_t n_subjects, int fs, std::size_t len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  HrirCorpus c;
  c.name = "rand" + std::to_string(seed);
  c.samplerate_hz = fs;
  for (std::size_t s = 0; s < n_subjects; ++s) {
    Subject subj;
    subj.id = "s" + std::to_string(s);
    for (EarSide side : {EarSide::left, EarSide::right}) {
      EarRecording e;
      e.side = e.source_side = side;
      e.positions = horizontal_ring_positions();
      e.hrir = Matrix<float>(12, len);
      for (std::size_t r = 0; r < 12; ++r) {
        const auto h = random_hrir(rng, len, 15.0);
        for (std::size_t i = 0; i < len; ++i) e.hrir(r, i) = static_cast<float>(h[i]);
      }
      subj.ears.push_back(std::move(e));
    }
    c.subjects.push_back(std::move(subj));
  }
  return c;
}

// ---------------------------------------------------------------- designs

inline ml::DesignMatrix make_design(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels) {
  ml::DesignMatrix d;
  d.rows = Matrix<double>(0, rows.empty() ? 0 : rows[0].size());
  for (const auto& r : rows) d.rows.append_row(r);
  d.labels = labels;
  d.groups.resize(labels.size());
  std::iota(d.groups.begin(), d.groups.end(), 0);
  return d;
}

inline ml::DesignMatrix random_design(std::mt19937_64& rng, std::size_t n, std::size_t f, int classes) {
  std::normal_distribution<double> nd;
  ml::DesignMatrix d;
  d.rows = Matrix<double>(n, f);
  for (auto& v : d.rows.data()) v = nd(rng);
  for (std::size_t i = 0; i < n; ++i) d.labels.push_back(static_cast<int>(i % static_cast<std::size_t>(classes)));
  d.groups.resize(n);
  std::iota(d.groups.begin(), d.groups.end(), 0);
  return d;
}

// Gaussian blobs centred at (+-3, +-3) per class.
inline ml::DesignMatrix blobs(std::mt19937_64& rng, std::size_t per_class, double spread = 0.5) {
  std::normal_distribution<double> nd(0.0, spread);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (int c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      const double centre = c == 0 ? -3.0 : 3.0;
      rows.push_back({centre + nd(rng), centre + nd(rng)});
      labels.push_back(c);
    }
  return make_design(rows, labels);
}

// ---------------------------------------------------------------- CART

// Exact purity comparison for the brute-force split oracle: sum of squared
// class counts over side size, kept as a fraction of 64-bit integers.
struct Fraction {
  std::int64_t num, den;
  bool operator>(const Fraction& o) const { return num * o.den > o.num * den; }
  bool operator==(const Fraction& o) const { return num * o.den == o.num * den; }
};

struct OracleSplit {
  bool exists = false;
  int feature = -1;
  double lo = 0.0, hi = 0.0;  // threshold lies in [lo, hi)
};

inline OracleSplit oracle_root_split(const ml::DesignMatrix& d, int n_classes) {
  OracleSplit best;
  Fraction best_purity{0, 1};
  for (std::size_t f = 0; f < d.n_features(); ++f) {
    std::set<double> values;
    for (std::size_t i = 0; i < d.n_samples(); ++i) values.insert(d.rows(i, f));
    std::vector<double> sorted(values.begin(), values.end());
    for (std::size_t t = 0; t + 1 < sorted.size(); ++t) {
      std::vector<std::int64_t> l(static_cast<std::size_t>(n_classes), 0), r(static_cast<std::size_t>(n_classes), 0);
      for (std::size_t i = 0; i < d.n_samples(); ++i)
        (d.rows(i, f) <= sorted[t] ? l : r)[static_cast<std::size_t>(d.labels[i])]++;
      std::int64_t nl = 0, nr = 0, sl = 0, sr = 0;
      for (int c = 0; c < n_classes; ++c) {
        nl += l[static_cast<std::size_t>(c)];
        nr += r[static_cast<std::size_t>(c)];
        sl += l[static_cast<std::size_t>(c)] * l[static_cast<std::size_t>(c)];
        sr += r[static_cast<std::size_t>(c)] * r[static_cast<std::size_t>(c)];
      }
      const Fraction purity{sl * nr + sr * nl, nl * nr};
      // Enumeration runs by feature then threshold, so only a strictly
      // purer candidate replaces the incumbent.
      if (!best.exists || purity > best_purity) {
        best = {true, static_cast<int>(f), sorted[t], sorted[t + 1]};
        best_purity = purity;
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------- kernel SVM

// Soft-margin RBF dual for one class against the rest, solved by projected
// gradient descent on the full kernel matrix.
struct RbfDualReference {
  std::vector<std::vector<double>> rows;
  std::vector<double> y, alpha;
  double gamma = 1.0, b = 0.0;
  bool has_free_vector = false;

  double kernel(const std::vector<double>& a, const std::vector<double>& c) const {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - c[i]) * (a[i] - c[i]);
    return std::exp(-gamma * s);
  }
  double decision(const std::vector<double>& x) const {
    double f = b;
    for (std::size_t j = 0; j < rows.size(); ++j) f += alpha[j] * y[j] * kernel(rows[j], x);
    return f;
  }
};

inline RbfDualReference solve_rbf_dual_reference(const std::vector<std::vector<double>>& rows,
                                                 const std::vector<int>& labels, int positive, double gamma,
                                                 double c_reg, int iterations = 50000) {
  RbfDualReference ref;
  ref.rows = rows;
  ref.gamma = gamma;
  const std::size_t n = rows.size();
  ref.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) ref.y[i] = labels[i] == positive ? 1.0 : -1.0;
  const auto& y = ref.y;
  Matrix<double> q(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) q(i, j) = y[i] * y[j] * ref.kernel(rows[i], rows[j]);
  auto project = [&](const std::vector<double>& v) {
    // Clip onto the box after shifting along y until y'a = 0.
    double lo = -1e3, hi = 1e3;
    std::vector<double> a(n);
    for (int it = 0; it < 200; ++it) {
      const double lam = 0.5 * (lo + hi);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        a[i] = std::clamp(v[i] - lam * y[i], 0.0, c_reg);
        s += y[i] * a[i];
      }
      (s > 0.0 ? lo : hi) = lam;
    }
    return a;
  };
  std::vector<double> alpha(n, 0.0), v(n);
  const double step = 1.0 / static_cast<double>(n);
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double g = -1.0;
      for (std::size_t j = 0; j < n; ++j) g += q(i, j) * alpha[j];
      v[i] = alpha[i] - step * g;
    }
    alpha = project(v);
  }
  ref.alpha = alpha;
  double b_sum = 0.0;
  int b_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] > 1e-6 && alpha[i] < c_reg - 1e-6) {
      double f = 0.0;
      for (std::size_t j = 0; j < n; ++j) f += alpha[j] * y[j] * ref.kernel(rows[j], rows[i]);
      b_sum += y[i] - f;
      ++b_count;
    }
  }
  ref.has_free_vector = b_count > 0;
  ref.b = b_count > 0 ? b_sum / b_count : 0.0;
  return ref;
}

}  // namespace hrtfprint::testing
