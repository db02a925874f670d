#pragma once

// Brings corpora recorded under different setups onto one representation:
// mirrored single-ear data on a shared direction grid, common sample rate
// and length, minimum phase, dataset-level gain normalisation and a
// band-limited magnitude spectrum per direction.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hrtfprint/corpus.hpp"
#include "hrtfprint/dsp/dsp.hpp"
#include "hrtfprint/error.hpp"
#include "hrtfprint/matrix.hpp"

namespace hrtfprint {

enum class MagnitudeScale { linear, db };

inline const char* to_string(MagnitudeScale s) { return s == MagnitudeScale::linear ? "linear" : "db"; }

inline MagnitudeScale parse_magnitude_scale(const std::string& s) {
  if (s == "linear") return MagnitudeScale::linear;
  if (s == "db") return MagnitudeScale::db;
  throw DataError("unknown magnitude scale '" + s + "'");
}

// Frequency band in Hz. lo_hz == 0 keeps the DC bin; any positive lower
// edge drops it.
struct Band {
  double lo_hz = 1.0;
  double hi_hz = 18000.0;
  bool includes_dc() const { return lo_hz == 0.0; }
  friend bool operator==(const Band&, const Band&) = default;
};

inline constexpr Band kDefaultBand{1.0, 18000.0};

struct HarmonizationConfig {
  int target_fs_hz = 44100;
  std::size_t target_len = 235;
  std::vector<Position> target_azimuths = horizontal_ring_positions();
  Band band = kDefaultBand;
  MagnitudeScale magnitude_scale = MagnitudeScale::linear;
  double az_tol_deg = kDefaultAzimuthTolerance;
  double el_tol_deg = kDefaultElevationTolerance;
  std::size_t fade_samples = 0;
  // Loudest measurement taken per ear instead of jointly per subject.
  bool scale_per_ear = false;
  // Convergence target for the cepstral grid search, relative to the peak.
  // Features only see magnitudes, which already hold to this level; the
  // strict library default costs several times more on echoic responses.
  double min_phase_tolerance = 1e-5;

  void check() const {
    if (target_fs_hz <= 0) throw UsageError("target sample rate must be positive");
    if (target_len == 0) throw UsageError("target length must be positive");
    if (target_azimuths.empty()) throw UsageError("no target directions");
    if (!(band.lo_hz >= 0.0 && band.lo_hz < band.hi_hz && band.hi_hz <= target_fs_hz / 2.0))
      throw UsageError("band must satisfy 0 <= lo < hi <= fs/2");
    if (!(min_phase_tolerance > 0.0 && min_phase_tolerance < 1.0))
      throw UsageError("minimum-phase tolerance must lie in (0, 1)");
  }
};

struct FeatureEntry {
  std::string subject_id;
  EarSide source_side = EarSide::left;
  Matrix<double> magnitudes;  // [n_azimuths x n_bins]
  friend bool operator==(const FeatureEntry&, const FeatureEntry&) = default;
};

struct HarmonizedFeatureSet {
  std::string dataset_name;
  std::vector<FeatureEntry> entries;
  std::vector<double> azimuths_deg;
  std::vector<double> bin_frequencies_hz;
  std::vector<std::size_t> bin_indices;
  double source_fs_hz = 0.0;
  std::size_t source_len = 0;
  double scale_factor = 1.0;
  MagnitudeScale magnitude_scale = MagnitudeScale::linear;
  HarmonizationConfig config;

  std::size_t n_azimuths() const { return azimuths_deg.size(); }
  std::size_t n_bins() const { return bin_indices.size(); }
};

namespace detail {

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Impulse responses for one subject: one [positions x samples] matrix per ear.
using SubjectResponses = std::vector<Matrix<double>>;

// 1 / median over subjects of each subject's loudest (max RMS) row.
inline double dataset_scale_factor(const std::vector<SubjectResponses>& subjects, bool per_ear = false) {
  if (subjects.empty()) throw DataError("empty corpus");
  std::vector<double> loudest;
  for (const auto& ears : subjects) {
    double subject_max = 0.0;
    for (const auto& ear : ears) {
      double ear_max = 0.0;
      for (std::size_t r = 0; r < ear.rows(); ++r) ear_max = std::max(ear_max, dsp::rms(ear.row(r)));
      if (per_ear)
        loudest.push_back(ear_max);
      else
        subject_max = std::max(subject_max, ear_max);
    }
    if (!per_ear) loudest.push_back(subject_max);
  }
  const double med = detail::median(std::move(loudest));
  if (!(med > 0.0)) throw DataError("all-zero corpus: cannot compute scale factor");
  return 1.0 / med;
}

inline std::vector<SubjectResponses> to_responses(const HrirCorpus& corpus) {
  std::vector<SubjectResponses> out;
  for (const auto& s : corpus.subjects) {
    SubjectResponses ears;
    for (const auto& e : s.ears)
      ears.emplace_back(e.hrir.rows(), e.hrir.cols(), std::vector<double>(e.hrir.data().begin(), e.hrir.data().end()));
    out.push_back(std::move(ears));
  }
  return out;
}

inline double dataset_scale_factor(const HrirCorpus& corpus, bool per_ear = false) {
  return dataset_scale_factor(to_responses(corpus), per_ear);
}

// Common-ground time-domain processing of one impulse response: resample,
// cut to length, minimum phase.
inline std::vector<double> condition_response(std::span<const double> hrir, int source_fs_hz,
                                              const HarmonizationConfig& cfg) {
  auto y = dsp::resample(hrir, source_fs_hz, cfg.target_fs_hz);
  y = dsp::truncate_or_pad(y, cfg.target_len, cfg.fade_samples);
  dsp::MinimumPhaseOptions mp;
  mp.tolerance = cfg.min_phase_tolerance;
  return dsp::minimum_phase(y, mp);
}

inline HarmonizedFeatureSet harmonize_corpus(const HrirCorpus& corpus, const HarmonizationConfig& cfg = {}) {
  cfg.check();
  validate(corpus);
  const HrirCorpus selected =
      select_positions(mirror_right_ears(corpus), cfg.target_azimuths, cfg.az_tol_deg, cfg.el_tol_deg);

  // Time-domain stage, then the dataset-wide gain as a barrier.
  std::vector<SubjectResponses> conditioned;
  for (const auto& subject : selected.subjects) {
    SubjectResponses ears;
    for (const auto& ear : subject.ears) {
      Matrix<double> rows;
      std::vector<double> buf(ear.hrir.cols());
      for (std::size_t r = 0; r < ear.hrir.rows(); ++r) {
        const auto src = ear.hrir.row(r);
        std::copy(src.begin(), src.end(), buf.begin());
        const auto y = condition_response(buf, corpus.samplerate_hz, cfg);
        rows.append_row(y);
      }
      ears.push_back(std::move(rows));
    }
    conditioned.push_back(std::move(ears));
  }
  const double factor = dataset_scale_factor(conditioned, cfg.scale_per_ear);

  HarmonizedFeatureSet out;
  out.dataset_name = corpus.name;
  out.scale_factor = factor;
  out.magnitude_scale = cfg.magnitude_scale;
  out.config = cfg;
  out.source_fs_hz = cfg.target_fs_hz;
  out.source_len = cfg.target_len;
  for (const auto& p : cfg.target_azimuths) out.azimuths_deg.push_back(p.azimuth_deg);

  std::vector<double> scaled(cfg.target_len);
  for (std::size_t si = 0; si < selected.subjects.size(); ++si) {
    const auto& subject = selected.subjects[si];
    for (std::size_t ei = 0; ei < subject.ears.size(); ++ei) {
      const auto& rows = conditioned[si][ei];
      FeatureEntry entry;
      entry.subject_id = subject.id;
      entry.source_side = subject.ears[ei].source_side;
      for (std::size_t r = 0; r < rows.rows(); ++r) {
        const auto src = rows.row(r);
        for (std::size_t i = 0; i < src.size(); ++i) scaled[i] = src[i] * factor;
        auto spec = dsp::select_band(dsp::magnitude_spectrum(scaled, cfg.target_fs_hz), cfg.band.lo_hz, cfg.band.hi_hz);
        if (cfg.magnitude_scale == MagnitudeScale::db)
          for (auto& m : spec.bin_values) m = 20.0 * std::log10(std::max(m, 1e-6));
        if (out.bin_indices.empty()) {
          out.bin_indices = spec.bin_indices;
          out.bin_frequencies_hz = spec.bin_frequencies_hz;
        }
        entry.magnitudes.append_row(spec.bin_values);
      }
      out.entries.push_back(std::move(entry));
    }
  }
  return out;
}

// Restricts a feature set to a narrower band by dropping stored bins. The
// requested band's bins must all be present.
inline HarmonizedFeatureSet reslice(const HarmonizedFeatureSet& set, const Band& band) {
  const auto range = dsp::band_bin_range(band.lo_hz, band.hi_hz, set.source_fs_hz, set.source_len);
  if (range.count() == 0) throw DataError("empty band");
  std::vector<std::size_t> keep;
  for (std::size_t k = range.first; k <= range.last; ++k) {
    auto it = std::find(set.bin_indices.begin(), set.bin_indices.end(), k);
    if (it == set.bin_indices.end())
      throw DataError("feature set '" + set.dataset_name + "' lacks bin " + std::to_string(k) +
                      " needed for the requested band; harmonise with a wider band");
    keep.push_back(static_cast<std::size_t>(it - set.bin_indices.begin()));
  }
  HarmonizedFeatureSet out = set;
  out.bin_indices.clear();
  out.bin_frequencies_hz.clear();
  for (auto i : keep) {
    out.bin_indices.push_back(set.bin_indices[i]);
    out.bin_frequencies_hz.push_back(set.bin_frequencies_hz[i]);
  }
  out.config.band = band;
  for (auto& e : out.entries) {
    Matrix<double> m(e.magnitudes.rows(), keep.size());
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < keep.size(); ++c) m(r, c) = e.magnitudes(r, keep[c]);
    e.magnitudes = std::move(m);
  }
  return out;
}

}  // namespace hrtfprint
