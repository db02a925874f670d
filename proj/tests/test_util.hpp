#pragma once

// Helpers shared by the unit suites. Nothing here calls into the library's
// own FFT so it can serve as an independent oracle.

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace hrtfprint::testing {

// O(N^2) DFT evaluated directly from the definition.
inline std::vector<std::complex<double>> naive_dft(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
      acc += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

// Single DFT coefficient at an arbitrary frequency, normalised to the
// amplitude of a sinusoid.
inline double tone_amplitude(const std::vector<double>& x, std::size_t offset, std::size_t len, double f, double fs) {
  std::complex<double> acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double ang = -2.0 * std::numbers::pi * f * static_cast<double>(i) / fs;
    acc += x[offset + i] * std::complex<double>(std::cos(ang), std::sin(ang));
  }
  return 2.0 * std::abs(acc) / static_cast<double>(len);
}

// Exponentially decaying Gaussian noise, shaped like a measured HRIR.
inline std::vector<double> random_hrir(std::mt19937_64& rng, std::size_t n, double decay_samples) {
  std::normal_distribution<double> nd;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = nd(rng) * std::exp(-static_cast<double>(i) / decay_samples);
  return x;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("hrtfprint_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace hrtfprint::testing
