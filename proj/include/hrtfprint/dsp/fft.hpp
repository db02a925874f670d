#pragma once

// Complex DFT of arbitrary length. Power-of-two sizes use an iterative
// radix-2 transform; everything else goes through Bluestein's chirp-z
// algorithm on a padded power-of-two grid.

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <span>
#include <vector>

namespace hrtfprint::dsp {

using Complex = std::complex<double>;

namespace detail {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// exp(-2 pi i k / n) for k < n / 2, cached per thread and size.
inline const std::vector<Complex>& twiddles(std::size_t n) {
  thread_local std::map<std::size_t, std::vector<Complex>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<Complex> w(n / 2);
  // Direct evaluation rather than recurrence for accuracy.
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    w[k] = {std::cos(ang), std::sin(ang)};
  }
  return cache.emplace(n, std::move(w)).first->second;
}

// In-place radix-2 DIT; sign = -1 forward, +1 inverse (unscaled).
inline void radix2(std::vector<Complex>& a, int sign) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const auto& table = twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex w = sign < 0 ? table[k * stride] : std::conj(table[k * stride]);
        const Complex u = a[i + k];
        const Complex t = a[i + k + half];
        const Complex v{t.real() * w.real() - t.imag() * w.imag(), t.real() * w.imag() + t.imag() * w.real()};
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

inline void bluestein(std::vector<Complex>& a, int sign) {
  const std::size_t n = a.size();
  const std::size_t m = next_power_of_two(2 * n - 1);
  std::vector<Complex> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle argument small and exact.
    const std::size_t k2 = (k * k) % (2 * n);
    const double ang = sign * std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
    chirp[k] = {std::cos(ang), std::sin(ang)};
  }
  std::vector<Complex> x(m), y(m);
  for (std::size_t k = 0; k < n; ++k) x[k] = a[k] * chirp[k];
  y[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) y[k] = y[m - k] = std::conj(chirp[k]);
  radix2(x, -1);
  radix2(y, -1);
  for (std::size_t i = 0; i < m; ++i) x[i] *= y[i];
  radix2(x, +1);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * inv_m * chirp[k];
}

inline void transform(std::vector<Complex>& a, int sign) {
  if (a.size() <= 1) return;
  if (is_power_of_two(a.size()))
    radix2(a, sign);
  else
    bluestein(a, sign);
}

}  // namespace detail

// Forward DFT: X[k] = sum_n x[n] exp(-2 pi i k n / N).
inline std::vector<Complex> fft(std::vector<Complex> x) {
  detail::transform(x, -1);
  return x;
}

inline std::vector<Complex> fft(std::span<const double> x) {
  return fft(std::vector<Complex>(x.begin(), x.end()));
}

// Inverse DFT including the 1/N factor.
inline std::vector<Complex> ifft(std::vector<Complex> x) {
  detail::transform(x, +1);
  const double inv = x.empty() ? 0.0 : 1.0 / static_cast<double>(x.size());
  for (auto& v : x) v *= inv;
  return x;
}

}  // namespace hrtfprint::dsp
