#pragma once

// Signal kernels used by harmonisation. All functions are pure.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "hrtfprint/dsp/fft.hpp"
#include "hrtfprint/dsp/resample.hpp"
#include "hrtfprint/error.hpp"

namespace hrtfprint::dsp {

// Copies the first min(len, n) samples and zero-pads to exactly n. With
// fade > 0 the last `fade` retained samples are shaped by a half-Hann
// fade-out; fade = 0 is a rectangular cut.
inline std::vector<double> truncate_or_pad(std::span<const double> x, std::size_t n, std::size_t fade = 0) {
  if (n == 0) throw UsageError("truncate_or_pad: target length must be positive");
  std::vector<double> y(n, 0.0);
  const std::size_t keep = std::min(n, x.size());
  std::copy_n(x.begin(), keep, y.begin());
  if (fade > 0 && x.size() > n) {
    fade = std::min(fade, n);
    for (std::size_t i = 0; i < fade; ++i) {
      const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * (static_cast<double>(i) + 1.0) / (static_cast<double>(fade) + 1.0)));
      y[n - fade + i] *= w;
    }
  }
  return y;
}

inline double rms(std::span<const double> x) {
  if (x.empty()) throw UsageError("rms: empty signal");
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return std::sqrt(acc / static_cast<double>(x.size()));
}

struct MinimumPhaseOptions {
  // Initial cepstral grid: smallest power of two holding pad_factor * N.
  std::size_t pad_factor = 8;
  double floor_db = -120.0;  // relative to the spectral peak
  // The grid doubles until the N-point magnitude of the result deviates from
  // the input's by at most this fraction of the peak magnitude.
  double tolerance = 1e-8;
  std::size_t max_grid = std::size_t{1} << 20;
};

// Minimum-phase reconstruction of a log-magnitude spectrum sampled on a full
// DFT grid of size M (bins 0..M-1). Returns the M-sample impulse response.
inline std::vector<double> minimum_phase_from_log_magnitude(const std::vector<double>& log_mag) {
  const std::size_t m = log_mag.size();
  std::vector<Complex> spec(log_mag.begin(), log_mag.end());
  auto cep = ifft(std::move(spec));
  // Fold the real cepstrum onto positive quefrencies.
  std::vector<Complex> folded(m, Complex{});
  folded[0] = cep[0].real();
  const std::size_t half = m / 2;
  for (std::size_t i = 1; i < (m + 1) / 2; ++i) folded[i] = 2.0 * cep[i].real();
  if (m % 2 == 0) folded[half] = cep[half].real();
  auto log_spec = fft(std::move(folded));
  for (auto& v : log_spec) v = std::exp(v);
  auto h = ifft(std::move(log_spec));
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = h[i].real();
  return out;
}

namespace detail {

inline std::vector<double> minimum_phase_on_grid(std::span<const double> x, std::size_t m, double floor) {
  std::vector<Complex> buf(m, Complex{});
  std::copy(x.begin(), x.end(), buf.begin());
  auto spec = fft(std::move(buf));
  std::vector<double> log_mag(m);
  for (std::size_t k = 0; k < m; ++k) log_mag[k] = std::log(std::max(std::abs(spec[k]), floor));
  auto h = minimum_phase_from_log_magnitude(log_mag);
  h.resize(x.size());
  return h;
}

}  // namespace detail

// Replaces the phase of x by the minimum phase consistent with its magnitude
// spectrum, keeping len(x) samples. Real-cepstrum folding on a zero-padded
// grid; the grid grows until cepstral aliasing no longer shows in the
// magnitude.
inline std::vector<double> minimum_phase(std::span<const double> x, const MinimumPhaseOptions& opt = {}) {
  const std::size_t n = x.size();
  if (n == 0) throw UsageError("minimum_phase: empty signal");
  const auto reference = fft(x);
  double peak = 0.0;
  for (const auto& v : reference) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) throw DataError("minimum_phase: all-zero input");

  // Magnitudes under the floor are clamped before taking logs, so the
  // convergence target is the clamped spectrum, not the raw one.
  const double floor = peak * std::pow(10.0, opt.floor_db / 20.0);
  std::size_t m = detail::next_power_of_two(n * std::max<std::size_t>(1, opt.pad_factor));
  std::vector<double> h;
  for (;;) {
    h = detail::minimum_phase_on_grid(x, m, floor);
    if (m >= opt.max_grid) break;
    const auto got = fft(h);
    double dev = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      dev = std::max(dev, std::fabs(std::abs(got[k]) - std::max(std::abs(reference[k]), floor)));
    if (dev <= opt.tolerance * peak) break;
    m *= 2;
  }
  return h;
}

struct Spectrum {
  std::vector<double> bin_values;         // linear magnitude
  std::vector<double> bin_frequencies_hz;
  std::vector<std::size_t> bin_indices;   // DFT index k of each retained bin
  double source_fs_hz = 0.0;
  std::size_t source_len = 0;

  std::size_t size() const { return bin_values.size(); }
};

inline double bin_frequency(std::size_t k, double fs_hz, std::size_t n) {
  return static_cast<double>(k) * fs_hz / static_cast<double>(n);
}

// Magnitudes of bins k = 0 .. floor(N/2).
inline Spectrum magnitude_spectrum(std::span<const double> x, double fs_hz) {
  if (x.size() < 2) throw UsageError("magnitude_spectrum: need at least two samples");
  const std::size_t n = x.size();
  const auto spec = fft(x);
  Spectrum s;
  s.source_fs_hz = fs_hz;
  s.source_len = n;
  for (std::size_t k = 0; k <= n / 2; ++k) {
    s.bin_values.push_back(std::abs(spec[k]));
    s.bin_frequencies_hz.push_back(bin_frequency(k, fs_hz, n));
    s.bin_indices.push_back(k);
  }
  return s;
}

struct BinRange {
  std::size_t first = 0;
  std::size_t last = 0;  // inclusive
  std::size_t count() const { return last >= first ? last - first + 1 : 0; }
};

// DFT indices kept by a [lo, hi] band on an N-point grid at fs. A positive
// lower edge always drops DC.
inline BinRange band_bin_range(double lo_hz, double hi_hz, double fs_hz, std::size_t n) {
  if (!(lo_hz >= 0.0) || !(hi_hz > lo_hz)) throw UsageError("band: need 0 <= lo < hi");
  constexpr double kEps = 1e-9;
  const double scale = static_cast<double>(n) / fs_hz;
  std::size_t first = 0;
  if (lo_hz > 0.0) first = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(lo_hz * scale - kEps)));
  const double hi_index = std::floor(hi_hz * scale + kEps);
  const std::size_t last = std::min<std::size_t>(n / 2, static_cast<std::size_t>(std::max(0.0, hi_index)));
  if (last < first) return {first, first == 0 ? 0 : first - 1};
  return {first, last};
}

inline Spectrum select_band(const Spectrum& s, double lo_hz, double hi_hz) {
  const auto range = band_bin_range(lo_hz, hi_hz, s.source_fs_hz, s.source_len);
  Spectrum out;
  out.source_fs_hz = s.source_fs_hz;
  out.source_len = s.source_len;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::size_t k = s.bin_indices[i];
    if (k < range.first || k > range.last) continue;
    out.bin_values.push_back(s.bin_values[i]);
    out.bin_frequencies_hz.push_back(s.bin_frequencies_hz[i]);
    out.bin_indices.push_back(k);
  }
  if (out.size() == 0) throw DataError("empty band");
  return out;
}

}  // namespace hrtfprint::dsp
