#pragma once

// Synthetic HRIR corpora with controllable measurement-setup artifacts:
// one room reflection (a low-frequency comb), additive noise with a fixed
// spectral level and tilt, and a smooth coloration. Subjects are drawn
// from distributions shared by every setup, so only the artifacts can
// tell two corpora apart.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrtfprint/corpus.hpp"
#include "hrtfprint/corpus_io.hpp"
#include "hrtfprint/dsp/dsp.hpp"
#include "hrtfprint/dsp/fft.hpp"

namespace hrtfprint::synth {

inline constexpr double kSpeedOfSound = 343.0;
inline constexpr double kEchoPulseSeconds = 1e-3;
inline constexpr double kSubjectReferenceRms = 0.09;

struct ColorationPoint {
  double frequency_hz = 1000.0;
  double gain_db = 0.0;
  friend bool operator==(const ColorationPoint&, const ColorationPoint&) = default;
};

struct SetupProfile {
  std::string name;
  int native_fs_hz = 48000;
  std::size_t native_len = 256;
  double radius_m = 0.08;  // onset delay = radius / speed of sound
  double reflection_delay_s = 2e-3;
  double reflection_gain = 0.4;
  double noise_floor_db = -30.0;  // per-bin noise level at 1 kHz, DFT units
  double noise_tilt_db_per_octave = 3.0;
  std::vector<ColorationPoint> coloration;  // empty = flat
  std::uint64_t seed = 0;

  // Everything except name and seed.
  bool same_artifacts(const SetupProfile& o) const {
    return native_fs_hz == o.native_fs_hz && native_len == o.native_len && radius_m == o.radius_m &&
           reflection_delay_s == o.reflection_delay_s && reflection_gain == o.reflection_gain &&
           noise_floor_db == o.noise_floor_db && noise_tilt_db_per_octave == o.noise_tilt_db_per_octave &&
           coloration == o.coloration;
  }

  void check() const {
    if (name.empty()) throw UsageError("profile name is empty");
    if (native_fs_hz < 44100) throw UsageError("profile '" + name + "': native_fs_hz must be >= 44100");
    // native_len / native_fs >= 16/3 ms, compared in integers.
    if (native_len * 3000 < static_cast<std::size_t>(native_fs_hz) * 16)
      throw UsageError("profile '" + name + "': native_len shorter than 5.333 ms");
    if (!(reflection_gain >= 0.0 && reflection_gain < 1.0))
      throw UsageError("profile '" + name + "': reflection_gain must lie in [0, 1)");
    if (!(reflection_delay_s >= 0.0) || !(radius_m >= 0.0)) throw UsageError("profile '" + name + "': negative delay");
    if (coloration.size() > 5) throw UsageError("profile '" + name + "': at most 5 coloration points");
    for (const auto& p : coloration)
      if (!(p.frequency_hz > 0.0)) throw UsageError("profile '" + name + "': coloration frequency must be positive");
  }
};

// Peak (gain_db > 0) or notch, bell-shaped on a log-frequency axis with
// a width of about 1/q octaves.
struct SpectralFeature {
  double center_hz = 1000.0;
  double q = 1.0;
  double gain_db = 0.0;

  double gain_db_at(double f_hz) const {
    const double x = 2.0 * q * std::log2(f_hz / center_hz);
    return gain_db * std::exp(-0.5 * x * x);
  }
};

struct SubjectParams {
  double head_radius_m = 0.0875;
  std::vector<SpectralFeature> features;
  // Right-ear deviations: relative center shift and gain offset per feature.
  std::vector<double> right_center_jitter;
  std::vector<double> right_gain_jitter_db;
  std::array<double, 2> ear_level_db{};  // left, right
  // Broad gain above ~3 kHz that brings the loudest direction to the
  // energy of a featureless head; set by draw_subject.
  double shelf_db = 0.0;
};

namespace detail {

inline std::mt19937_64 seeded_rng(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words;
  for (auto p : parts) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

inline double coloration_db(const std::vector<ColorationPoint>& pts, double f_hz) {
  if (pts.empty()) return 0.0;
  std::vector<ColorationPoint> sorted = pts;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.frequency_hz < b.frequency_hz; });
  if (f_hz <= sorted.front().frequency_hz) return sorted.front().gain_db;
  if (f_hz >= sorted.back().frequency_hz) return sorted.back().gain_db;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (f_hz <= sorted[i].frequency_hz) {
      const double a = std::log2(sorted[i - 1].frequency_hz), b = std::log2(sorted[i].frequency_hz);
      const double t = (std::log2(f_hz) - a) / (b - a);
      return sorted[i - 1].gain_db + t * (sorted[i].gain_db - sorted[i - 1].gain_db);
    }
  }
  return sorted.back().gain_db;
}

// Direction-dependent level: shadowing grows with frequency and with the
// angle between the source and the ear axis.
inline double direction_db(double azimuth_deg, EarSide side, double f_hz) {
  const double axis = side == EarSide::left ? 90.0 : 270.0;
  const double c = std::cos((azimuth_deg - axis) * std::numbers::pi / 180.0);
  const double shadow = 3.0 + 12.0 * f_hz / (f_hz + 1500.0);
  return -0.5 * (1.0 - c) * shadow + 2.0 * c * f_hz / (f_hz + 3000.0);
}

inline double rolloff_db(double f_hz) { return -10.0 * std::log10(1.0 + std::pow(f_hz / 11000.0, 8.0)); }

inline constexpr double kShelfCornerHz = 3000.0;

inline double shelf_weight(double f_hz) { return 1.0 / (1.0 + std::pow(kShelfCornerHz / f_hz, 4.0)); }

// Subject-only level in dB: everything except the setup coloration.
inline double subject_db(const SubjectParams& s, EarSide side, double azimuth_deg, double f_hz) {
  double db = s.ear_level_db[side == EarSide::left ? 0 : 1] + direction_db(azimuth_deg, side, f_hz) +
              rolloff_db(f_hz) + s.shelf_db * shelf_weight(f_hz);
  // Head size scales the feature frequencies around a reference radius.
  const double size_scale = 0.0875 / s.head_radius_m;
  const double elevation_cue = 1.0 + 0.04 * std::cos(azimuth_deg * std::numbers::pi / 180.0);
  for (std::size_t i = 0; i < s.features.size(); ++i) {
    auto feat = s.features[i];
    feat.center_hz *= size_scale * elevation_cue;
    if (side == EarSide::right) {
      feat.center_hz *= 1.0 + s.right_center_jitter[i];
      feat.gain_db += s.right_gain_jitter_db[i];
    }
    db += feat.gain_db_at(f_hz);
  }
  return db;
}

// Per-direction power spectra over both ears on a coarse 0 to 22 kHz grid.
inline constexpr int kEnergyGrid = 256;

inline double energy_grid_hz(int k) { return 22050.0 * k / kEnergyGrid; }

inline std::vector<std::vector<double>> ring_power(const SubjectParams& s) {
  std::vector<std::vector<double>> out;
  for (EarSide side : {EarSide::left, EarSide::right})
    for (const auto& pos : horizontal_ring_positions()) {
      std::vector<double> row(kEnergyGrid);
      for (int k = 1; k <= kEnergyGrid; ++k)
        row[static_cast<std::size_t>(k - 1)] = std::pow(10.0, subject_db(s, side, pos.azimuth_deg, energy_grid_hz(k)) / 10.0);
      out.push_back(std::move(row));
    }
  return out;
}

inline double loudest_energy(const std::vector<std::vector<double>>& power, const std::vector<double>& weight) {
  double loudest = 0.0;
  for (const auto& row : power) loudest = std::max(loudest, std::inner_product(row.begin(), row.end(), weight.begin(), 0.0));
  return loudest;
}

}  // namespace detail

inline SubjectParams draw_subject(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  SubjectParams s;
  s.head_radius_m = 0.075 + 0.02 * u(rng);
  for (int i = 0; i < 2; ++i)
    s.features.push_back({detail::log_uniform(rng, 2500.0, 6000.0), 1.0 + 1.5 * u(rng), 4.0 + 6.0 * u(rng)});
  for (int i = 0; i < 2; ++i)
    s.features.push_back({detail::log_uniform(rng, 6000.0, 12000.0), 2.0 + 3.0 * u(rng), -5.0 - 10.0 * u(rng)});
  s.features.push_back({detail::log_uniform(rng, 1200.0, 2500.0), 1.0 + u(rng), -3.0 + 6.0 * u(rng)});
  for (std::size_t i = 0; i < s.features.size(); ++i) {
    s.right_center_jitter.push_back(0.02 * nd(rng));
    s.right_gain_jitter_db.push_back(0.5 * nd(rng));
  }
  s.ear_level_db = {0.5 * nd(rng), 0.5 * nd(rng)};
  // Energy matching keeps every subject at unit gain in the lowest band
  // while the loudness normalisation downstream stays exact, so the
  // concha and notch spread does not turn into a level spread.
  SubjectParams plain;
  plain.head_radius_m = s.head_radius_m;
  const std::vector<double> flat(detail::kEnergyGrid, 1.0);
  const double target = detail::loudest_energy(detail::ring_power(plain), flat);
  const auto power = detail::ring_power(s);
  std::vector<double> weight(detail::kEnergyGrid);
  double lo = -30.0, hi = 30.0;
  for (int it = 0; it < 40; ++it) {
    const double g = 0.5 * (lo + hi);
    for (int k = 1; k <= detail::kEnergyGrid; ++k)
      weight[static_cast<std::size_t>(k - 1)] = std::pow(10.0, g * detail::shelf_weight(detail::energy_grid_hz(k)) / 10.0);
    (detail::loudest_energy(power, weight) > target ? hi : lo) = g;
  }
  s.shelf_db = 0.5 * (lo + hi);
  return s;
}

// Minimum-phase direct-path response of one subject, ear and direction at
// the profile's native rate, `len` samples long.
inline std::vector<double> direct_response(const SubjectParams& s, EarSide side, double azimuth_deg,
                                           const SetupProfile& p, std::size_t len) {
  const std::size_t m = dsp::detail::next_power_of_two(std::max<std::size_t>(8 * p.native_len, 4096));
  const double fs = p.native_fs_hz;
  std::vector<double> log_mag(m);
  for (std::size_t k = 0; k <= m / 2; ++k) {
    const double f = std::max(1.0, static_cast<double>(k) * fs / static_cast<double>(m));
    const double db = detail::subject_db(s, side, azimuth_deg, f) + detail::coloration_db(p.coloration, f);
    log_mag[k] = db * std::numbers::ln10 / 20.0;
    if (k > 0 && k < m - k) log_mag[m - k] = log_mag[k];
  }
  auto h = dsp::minimum_phase_from_log_magnitude(log_mag);
  h.resize(len);
  return h;
}

// Minimum-phase impulse response of the profile's coloration alone.
inline std::vector<double> coloration_response(const SetupProfile& p, std::size_t len) {
  const std::size_t m = dsp::detail::next_power_of_two(std::max<std::size_t>(8 * p.native_len, 4096));
  std::vector<double> log_mag(m);
  for (std::size_t k = 0; k <= m / 2; ++k) {
    const double f = std::max(1.0, static_cast<double>(k) * p.native_fs_hz / static_cast<double>(m));
    log_mag[k] = detail::coloration_db(p.coloration, f) * std::numbers::ln10 / 20.0;
    if (k > 0 && k < m - k) log_mag[m - k] = log_mag[k];
  }
  auto h = dsp::minimum_phase_from_log_magnitude(log_mag);
  h.resize(len);
  return h;
}

// Real noise whose N-point DFT has i.i.d. complex Gaussian bins with
// standard deviation set by the profile's floor and tilt.
inline std::vector<double> setup_noise(const SetupProfile& p, std::mt19937_64& rng) {
  const std::size_t n = p.native_len;
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<dsp::Complex> spec(n, dsp::Complex{});
  for (std::size_t k = 1; k <= n / 2; ++k) {
    const double f = static_cast<double>(k) * p.native_fs_hz / static_cast<double>(n);
    const double sigma =
        std::pow(10.0, (p.noise_floor_db + p.noise_tilt_db_per_octave * std::log2(f / 1000.0)) / 20.0);
    if (2 * k == n) {
      spec[k] = sigma * nd(rng);
      continue;
    }
    const double re = nd(rng), im = nd(rng);
    spec[k] = sigma * std::numbers::sqrt2 / 2.0 * dsp::Complex(re, im);
    spec[n - k] = std::conj(spec[k]);
  }
  const auto t = dsp::ifft(spec);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = t[i].real();
  return out;
}

inline std::string subject_id(std::size_t index) {
  std::string digits = std::to_string(index + 1);
  return "S" + std::string(digits.size() < 3 ? 3 - digits.size() : 0, '0') + digits;
}

// Deterministic in (profile.seed, seed). Subjects come from the shared
// population; every measurement gets its own noise draw.
inline HrirCorpus synth_corpus(const SetupProfile& p, std::size_t n_subjects, std::uint64_t seed) {
  p.check();
  if (n_subjects == 0) throw UsageError("synth_corpus: need at least one subject");
  const double fs = p.native_fs_hz;
  const auto onset = static_cast<std::size_t>(std::llround(p.radius_m / kSpeedOfSound * fs));
  const auto echo_at = onset + static_cast<std::size_t>(std::llround(p.reflection_delay_s * fs));
  const auto pulse_len = std::max<std::size_t>(3, static_cast<std::size_t>(std::llround(kEchoPulseSeconds * fs)));
  std::vector<double> pulse(pulse_len);
  for (std::size_t i = 0; i < pulse_len; ++i) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(i + 1) / static_cast<double>(pulse_len + 1));
    pulse[i] = s * s;
  }
  const double pulse_sum = std::accumulate(pulse.begin(), pulse.end(), 0.0);
  for (auto& v : pulse) v /= pulse_sum;
  // The reflection reaches the microphone through the same transducers.
  const auto chain = coloration_response(p, p.native_len);
  std::vector<double> echo(p.native_len, 0.0);
  for (std::size_t i = 0; i < pulse_len; ++i)
    for (std::size_t j = 0; i + j < echo.size(); ++j) echo[i + j] += pulse[i] * chain[j];

  HrirCorpus c;
  c.name = p.name;
  c.samplerate_hz = p.native_fs_hz;
  c.method = AcquisitionMethod::measured;
  const auto ring = horizontal_ring_positions();
  for (std::size_t si = 0; si < n_subjects; ++si) {
    auto subject_rng = detail::seeded_rng({p.seed, seed, si, 0x51ULL});
    const SubjectParams params = draw_subject(subject_rng);
    Subject subject;
    subject.id = subject_id(si);
    // Direct paths for both ears, scaled so the loudest one sits at the
    // reference level. Otherwise overall subject loudness leaks into the
    // per-dataset normalisation and null setups become separable.
    std::array<std::vector<std::vector<double>>, 2> directs;
    double loudest = 0.0;
    if (onset < p.native_len)
      for (EarSide side : {EarSide::left, EarSide::right})
        for (const auto& pos : ring) {
          auto d = direct_response(params, side, pos.azimuth_deg, p, p.native_len - onset);
          loudest = std::max(loudest, dsp::rms(d));
          directs[static_cast<std::size_t>(side)].push_back(std::move(d));
        }
    const double level = loudest > 0.0 ? kSubjectReferenceRms / loudest : 0.0;
    for (EarSide side : {EarSide::left, EarSide::right}) {
      EarRecording ear;
      ear.side = ear.source_side = side;
      ear.hrir = Matrix<float>(ring.size(), p.native_len);
      for (std::size_t a = 0; a < ring.size(); ++a) {
        Position pos = ring[a];
        pos.distance_m = 1.2;
        ear.positions.push_back(pos);
        std::vector<double> h(p.native_len, 0.0);
        if (onset < p.native_len) {
          const auto& direct = directs[static_cast<std::size_t>(side)][a];
          for (std::size_t i = 0; i < direct.size(); ++i) h[onset + i] = level * direct[i];
        }
        for (std::size_t i = 0; echo_at + i < p.native_len; ++i) h[echo_at + i] += p.reflection_gain * echo[i];
        auto noise_rng = detail::seeded_rng({p.seed, seed, si, static_cast<std::uint64_t>(side), a, 0xE5ULL});
        const auto noise = setup_noise(p, noise_rng);
        auto row = ear.hrir.row(a);
        for (std::size_t i = 0; i < p.native_len; ++i) row[i] = static_cast<float>(h[i] + noise[i]);
      }
      subject.ears.push_back(std::move(ear));
    }
    c.subjects.push_back(std::move(subject));
  }
  return c;
}

enum class Distinctness { null, mild, strong };

inline const char* to_string(Distinctness d) {
  switch (d) {
    case Distinctness::null: return "null";
    case Distinctness::mild: return "mild";
    case Distinctness::strong: return "strong";
  }
  return "?";
}

inline Distinctness parse_distinctness(const std::string& s) {
  if (s == "null") return Distinctness::null;
  if (s == "mild") return Distinctness::mild;
  if (s == "strong") return Distinctness::strong;
  throw UsageError("unknown profile family '" + s + "' (expected null, mild or strong)");
}

inline std::string profile_name(std::size_t index) {
  std::string digits = std::to_string(index);
  return "setup_" + std::string(digits.size() < 2 ? 2 - digits.size() : 0, '0') + digits;
}

namespace detail {

// Residual transducer roll-off left over after free-field compensation:
// flat from 1.5 to 12 kHz, rank-spaced levels at 300 Hz, 16 kHz and 19 kHz.
// The 16 kHz ranks are the 300 Hz ranks shifted by half a cycle, so a setup
// near the middle at one edge sits near an extreme at the other.
inline std::vector<std::vector<ColorationPoint>> edge_colorations(std::size_t n, double step, std::mt19937_64& rng) {
  std::array<std::vector<std::size_t>, 3> rank;
  for (std::size_t a : {0u, 2u}) {
    rank[a].resize(n);
    std::iota(rank[a].begin(), rank[a].end(), 0);
    std::shuffle(rank[a].begin(), rank[a].end(), rng);
  }
  for (std::size_t j = 0; j < n; ++j) rank[1].push_back((rank[0][j] + n / 2) % n);
  const double centre = 0.5 * static_cast<double>(n - 1);
  std::vector<std::vector<ColorationPoint>> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    auto db = [&](std::size_t a) { return step * (static_cast<double>(rank[a][j]) - centre); };
    out[j] = {{300.0, db(0)}, {1500.0, 0.0}, {12000.0, 0.0}, {16000.0, db(1)}, {19000.0, db(2)}};
  }
  return out;
}

}  // namespace detail

// null: identical artifacts, seeds differ. mild: small spreads around the
// null setup plus edge coloration in sub-dB steps. strong: every artifact
// rank-spaced, reflection delays at least 0.4 ms apart (for n <= 10), edge
// coloration in 3 dB steps, mixed native sample rates.
inline std::vector<SetupProfile> default_profiles(std::size_t n, Distinctness distinctness, std::uint64_t seed) {
  if (n < 2) throw UsageError("default_profiles: need at least two profiles");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<SetupProfile> out(n);
  for (std::size_t j = 0; j < n; ++j) {
    out[j].name = profile_name(j);
    out[j].seed = rng();
  }
  if (distinctness == Distinctness::null) return out;

  if (distinctness == Distinctness::mild) {
    for (std::size_t j = 0; j < n; ++j) {
      auto& p = out[j];
      p.reflection_delay_s = 2e-3 + 0.1e-3 * (u(rng) - 0.5);
      p.reflection_gain = 0.4 + 0.06 * (u(rng) - 0.5);
      p.noise_floor_db = -30.0 + 2.0 * (u(rng) - 0.5);
      p.noise_tilt_db_per_octave = 3.0 + 0.4 * (u(rng) - 0.5);
    }
    const auto edges = detail::edge_colorations(n, std::min(0.75, 6.75 / static_cast<double>(n - 1)), rng);
    for (std::size_t j = 0; j < n; ++j) out[j].coloration = edges[j];
    return out;
  }

  std::vector<std::size_t> delay_rank(n), noise_rank(n), gain_rank(n), tilt_rank(n);
  for (auto* r : {&delay_rank, &noise_rank, &gain_rank, &tilt_rank}) {
    std::iota(r->begin(), r->end(), 0);
    std::shuffle(r->begin(), r->end(), rng);
  }
  const double edge_step = std::min(3.0, 27.0 / static_cast<double>(n - 1));
  const auto edges = detail::edge_colorations(n, edge_step, rng);
  const double spacing = std::min(0.4e-3, 3.6e-3 / static_cast<double>(n - 1));
  const double noise_step = std::min(2.5, 22.5 / static_cast<double>(n - 1));
  const double tilt_step = std::min(0.6, 5.4 / static_cast<double>(n - 1));
  constexpr std::array<int, 3> kRates{44100, 48000, 96000};
  constexpr std::array<std::size_t, 3> kLens{256, 256, 512};
  for (std::size_t j = 0; j < n; ++j) {
    auto& p = out[j];
    p.native_fs_hz = kRates[j % 3];
    p.native_len = kLens[j % 3];
    p.radius_m = 0.03 + 0.07 * u(rng);
    p.reflection_delay_s = 0.4e-3 + spacing * static_cast<double>(delay_rank[j]);
    p.reflection_gain = 0.3 + 0.6 * static_cast<double>(gain_rank[j]) / static_cast<double>(n - 1);
    p.noise_floor_db = -38.0 + noise_step * static_cast<double>(noise_rank[j]);
    p.noise_tilt_db_per_octave = 0.5 + tilt_step * static_cast<double>(tilt_rank[j]);
    p.coloration = edges[j];
  }
  return out;
}

inline nlohmann::json to_json(const SetupProfile& p) {
  nlohmann::json col = nlohmann::json::array();
  for (const auto& c : p.coloration) col.push_back({c.frequency_hz, c.gain_db});
  return {{"name", p.name},
          {"native_fs_hz", p.native_fs_hz},
          {"native_len", p.native_len},
          {"radius_m", p.radius_m},
          {"reflection_delay_s", p.reflection_delay_s},
          {"reflection_gain", p.reflection_gain},
          {"noise_floor_db", p.noise_floor_db},
          {"noise_tilt_db_per_octave", p.noise_tilt_db_per_octave},
          {"coloration", col},
          {"seed", p.seed}};
}

inline SetupProfile profile_from_json(const nlohmann::json& j) {
  SetupProfile p;
  p.name = j.at("name").get<std::string>();
  p.native_fs_hz = j.at("native_fs_hz").get<int>();
  p.native_len = j.at("native_len").get<std::size_t>();
  p.radius_m = j.at("radius_m").get<double>();
  p.reflection_delay_s = j.at("reflection_delay_s").get<double>();
  p.reflection_gain = j.at("reflection_gain").get<double>();
  p.noise_floor_db = j.at("noise_floor_db").get<double>();
  p.noise_tilt_db_per_octave = j.at("noise_tilt_db_per_octave").get<double>();
  for (const auto& c : j.at("coloration")) p.coloration.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
  p.seed = j.at("seed").get<std::uint64_t>();
  p.check();
  return p;
}

inline void save_profiles(const std::vector<SetupProfile>& profiles, const std::filesystem::path& file) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& p : profiles) j.push_back(to_json(p));
  hrtfprint::detail::write_json_file(file, j);
}

inline std::vector<SetupProfile> load_profiles(const std::filesystem::path& file) {
  const auto j = hrtfprint::detail::read_json_file(file);
  std::vector<SetupProfile> out;
  try {
    for (const auto& e : j) out.push_back(profile_from_json(e));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(file.string() + ": " + e.what());
  }
  return out;
}

}  // namespace hrtfprint::synth
