#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <numeric>
#include <span>
#include <tuple>
#include <vector>

#include "hrtfprint/error.hpp"

namespace hrtfprint::dsp {

struct ResamplerDesign {
  double kaiser_beta = 8.6;
  // Filter support, counted in samples of the lower of the two rates.
  int taps_at_lower_rate = 32;
  // Cutoff as a fraction of the lower rate.
  double cutoff_fraction = 0.45;
};

namespace detail {

inline double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

inline double kaiser(double u, double beta) {
  // u in [-1, 1]
  if (u <= -1.0 || u >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - u * u)) / std::cyl_bessel_i(0.0, beta);
}

}  // namespace detail

// Rational-ratio polyphase resampler with a Kaiser-windowed sinc kernel.
// Output sample n sits at time n / to_hz and has length
// floor(len * to_hz / from_hz).
inline std::vector<double> resample(std::span<const double> x, std::int64_t from_hz, std::int64_t to_hz,
                                    const ResamplerDesign& design = {}) {
  if (from_hz <= 0 || to_hz <= 0) throw UsageError("resample: sample rates must be positive");
  if (from_hz == to_hz) return {x.begin(), x.end()};

  const std::int64_t g = std::gcd(from_hz, to_hz);
  const std::int64_t up = to_hz / g;    // L
  const std::int64_t down = from_hz / g;  // M
  const auto n_in = static_cast<std::int64_t>(x.size());
  const std::int64_t n_out = n_in * to_hz / from_hz;

  const double lower = static_cast<double>(std::min(from_hz, to_hz));
  const double fc = design.cutoff_fraction * lower;
  const double half_width_s = 0.5 * design.taps_at_lower_rate / lower;
  const double from = static_cast<double>(from_hz);
  const auto half_taps = static_cast<std::int64_t>(std::ceil(half_width_s * from));
  const double gain = 2.0 * fc / from;

  // Coefficient for input offset j = k0 - k at polyphase index `phase`.
  auto coefficient = [&](std::int64_t phase, std::int64_t j) {
    const double tau = static_cast<double>(j * up + phase) / (static_cast<double>(up) * from);
    return gain * detail::sinc(2.0 * fc * tau) * detail::kaiser(tau / half_width_s, design.kaiser_beta);
  };

  const std::int64_t n_taps = 2 * half_taps;
  // Polyphase table, cached per thread for repeated conversions between
  // the same pair of rates.
  const bool tabulate = up <= 8192;
  using Key = std::tuple<std::int64_t, std::int64_t, double, int, double>;
  thread_local std::map<Key, std::vector<double>> cache;
  const std::vector<double>* table = nullptr;
  if (tabulate) {
    const Key key{from_hz, to_hz, design.kaiser_beta, design.taps_at_lower_rate, design.cutoff_fraction};
    auto it = cache.find(key);
    if (it == cache.end()) {
      std::vector<double> t(static_cast<std::size_t>(up * n_taps));
      for (std::int64_t p = 0; p < up; ++p)
        for (std::int64_t i = 0; i < n_taps; ++i)
          t[static_cast<std::size_t>(p * n_taps + i)] = coefficient(p, i - half_taps + 1);
      it = cache.emplace(key, std::move(t)).first;
    }
    table = &it->second;
  }

  std::vector<double> y(static_cast<std::size_t>(n_out), 0.0);
  for (std::int64_t n = 0; n < n_out; ++n) {
    const std::int64_t pos = n * down;
    const std::int64_t k0 = pos / up;
    const std::int64_t phase = pos % up;
    double acc = 0.0;
    for (std::int64_t t = 0; t < n_taps; ++t) {
      const std::int64_t j = t - half_taps + 1;
      const std::int64_t k = k0 - j;
      if (k < 0 || k >= n_in) continue;
      const double c = tabulate ? (*table)[static_cast<std::size_t>(phase * n_taps + t)] : coefficient(phase, j);
      acc += c * x[static_cast<std::size_t>(k)];
    }
    y[static_cast<std::size_t>(n)] = acc;
  }
  return y;
}

}  // namespace hrtfprint::dsp
