#pragma once

// HRIR corpus data model: positions, ear recordings, subjects and whole
// datasets, plus the two position-level transforms applied before any
// signal processing (median-plane mirroring and target-grid selection).

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hrtfprint/error.hpp"
#include "hrtfprint/matrix.hpp"

namespace hrtfprint {

inline double normalize_azimuth(double azimuth_deg) {
  double a = std::fmod(azimuth_deg, 360.0);
  if (a < 0.0) a += 360.0;
  if (a >= 360.0) a -= 360.0;  // fmod of tiny negatives can round up to 360
  return a;
}

struct Position {
  double azimuth_deg = 0.0;    // [0, 360), counterclockwise from front
  double elevation_deg = 0.0;  // [-90, 90]
  std::optional<double> distance_m;

  Position() = default;
  Position(double az, double el, std::optional<double> dist = std::nullopt)
      : azimuth_deg(normalize_azimuth(az)), elevation_deg(el), distance_m(dist) {}

  friend bool operator==(const Position&, const Position&) = default;
};

// Great-circle distance in degrees between two directions.
inline double angular_distance_deg(const Position& a, const Position& b) {
  constexpr double kRad = std::numbers::pi / 180.0;
  const double el1 = a.elevation_deg * kRad, el2 = b.elevation_deg * kRad;
  const double daz = (a.azimuth_deg - b.azimuth_deg) * kRad;
  // Haversine form stays accurate for the small angles we care about.
  const double s1 = std::sin((el2 - el1) / 2.0);
  const double s2 = std::sin(daz / 2.0);
  const double h = s1 * s1 + std::cos(el1) * std::cos(el2) * s2 * s2;
  return 2.0 * std::asin(std::min(1.0, std::sqrt(h))) / kRad;
}

// Smallest absolute azimuth difference on the circle, in degrees.
inline double azimuth_difference_deg(double a, double b) {
  const double d = std::fabs(normalize_azimuth(a) - normalize_azimuth(b));
  return std::min(d, 360.0 - d);
}

enum class EarSide { left, right };

inline const char* to_string(EarSide side) { return side == EarSide::left ? "left" : "right"; }

inline EarSide parse_ear_side(const std::string& s) {
  if (s == "left") return EarSide::left;
  if (s == "right") return EarSide::right;
  throw DataError("unknown ear side '" + s + "'");
}

struct EarRecording {
  EarSide side = EarSide::left;
  // Side the recording was measured on; differs from `side` after mirroring.
  EarSide source_side = EarSide::left;
  std::vector<Position> positions;
  Matrix<float> hrir;  // [n_positions x n_samples], linear amplitude

  std::size_t n_samples() const { return hrir.cols(); }
  friend bool operator==(const EarRecording&, const EarRecording&) = default;
};

struct Subject {
  std::string id;
  std::vector<EarRecording> ears;
  friend bool operator==(const Subject&, const Subject&) = default;
};

enum class AcquisitionMethod { measured, simulated };

inline const char* to_string(AcquisitionMethod m) {
  return m == AcquisitionMethod::measured ? "measured" : "simulated";
}

inline AcquisitionMethod parse_method(const std::string& s) {
  if (s == "measured") return AcquisitionMethod::measured;
  if (s == "simulated") return AcquisitionMethod::simulated;
  throw DataError("unknown acquisition method '" + s + "'");
}

struct HrirCorpus {
  std::string name;
  int samplerate_hz = 0;
  AcquisitionMethod method = AcquisitionMethod::measured;
  std::optional<double> radius_m;
  std::vector<Subject> subjects;

  std::size_t n_samples() const {
    for (const auto& s : subjects)
      for (const auto& e : s.ears) return e.n_samples();
    return 0;
  }
  friend bool operator==(const HrirCorpus&, const HrirCorpus&) = default;
};

// Throws DataError describing the first violated invariant.
inline void validate(const HrirCorpus& corpus) {
  if (corpus.name.empty()) throw DataError("corpus name is empty");
  if (corpus.samplerate_hz <= 0) throw DataError("samplerate must be positive");
  if (corpus.subjects.empty()) throw DataError("empty corpus");
  std::set<std::string> ids;
  std::optional<std::size_t> n_samples;
  for (const auto& subject : corpus.subjects) {
    if (!ids.insert(subject.id).second) throw DataError("duplicate subject id '" + subject.id + "'");
    if (subject.ears.empty() || subject.ears.size() > 2)
      throw DataError("subject '" + subject.id + "' must have one or two ears");
    if (subject.ears.size() == 2 && subject.ears[0].side == subject.ears[1].side &&
        subject.ears[0].source_side == subject.ears[1].source_side)
      throw DataError("subject '" + subject.id + "' has two recordings for one side");
    for (const auto& ear : subject.ears) {
      if (ear.positions.empty()) throw DataError("subject '" + subject.id + "' has an ear without positions");
      if (ear.hrir.rows() != ear.positions.size())
        throw DataError("subject '" + subject.id + "': hrir rows do not match positions");
      if (ear.hrir.cols() == 0) throw DataError("subject '" + subject.id + "': empty impulse responses");
      if (n_samples && *n_samples != ear.hrir.cols())
        throw DataError("subject '" + subject.id + "': impulse response length differs within corpus");
      n_samples = ear.hrir.cols();
      for (const auto& p : ear.positions) {
        if (!(p.azimuth_deg >= 0.0 && p.azimuth_deg < 360.0) || !(p.elevation_deg >= -90.0 && p.elevation_deg <= 90.0))
          throw DataError("subject '" + subject.id + "': position out of range");
      }
      for (float v : ear.hrir.data())
        if (!std::isfinite(v)) throw DataError("subject '" + subject.id + "': non-finite sample");
    }
  }
}

// Reflects every right-ear recording about the median plane so it can be
// treated as another left ear. Left ears pass through untouched and keep
// their place ahead of the mirrored right ear.
inline HrirCorpus mirror_right_ears(const HrirCorpus& corpus) {
  HrirCorpus out = corpus;
  for (auto& subject : out.subjects) {
    for (auto& ear : subject.ears) {
      if (ear.side != EarSide::right) continue;
      ear.side = EarSide::left;
      ear.source_side = EarSide::right;
      for (auto& p : ear.positions) p.azimuth_deg = normalize_azimuth(360.0 - p.azimuth_deg);
    }
    std::stable_sort(subject.ears.begin(), subject.ears.end(), [](const EarRecording& a, const EarRecording& b) {
      return a.source_side == EarSide::left && b.source_side == EarSide::right;
    });
  }
  return out;
}

inline constexpr double kDefaultAzimuthTolerance = 3.0;
inline constexpr double kDefaultElevationTolerance = 1.0;

// The twelve horizontal-plane directions in 30 degree steps, in the order
// 0, 30, ..., 330.
inline std::vector<Position> horizontal_ring_positions() {
  std::vector<Position> out;
  for (int i = 0; i < 12; ++i) out.emplace_back(30.0 * i, 0.0);
  return out;
}

// Index of the measured position that best matches `target`, or nullopt.
// Ties in angular distance go to the lower azimuth, then lower elevation.
inline std::optional<std::size_t> match_position(const std::vector<Position>& measured, const Position& target,
                                                 double az_tol_deg, double el_tol_deg) {
  std::optional<std::size_t> best;
  double best_dist = 0.0;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    const auto& p = measured[i];
    if (azimuth_difference_deg(p.azimuth_deg, target.azimuth_deg) > az_tol_deg) continue;
    if (std::fabs(p.elevation_deg - target.elevation_deg) > el_tol_deg) continue;
    const double d = angular_distance_deg(p, target);
    if (!best) {
      best = i;
      best_dist = d;
      continue;
    }
    const auto& q = measured[*best];
    if (d < best_dist || (d == best_dist && (p.azimuth_deg < q.azimuth_deg ||
                                             (p.azimuth_deg == q.azimuth_deg && p.elevation_deg < q.elevation_deg)))) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

// Reduces every ear recording to exactly one row per target direction, in
// target order. No spatial interpolation is performed.
inline HrirCorpus select_positions(const HrirCorpus& corpus, const std::vector<Position>& targets,
                                   double az_tol_deg = kDefaultAzimuthTolerance,
                                   double el_tol_deg = kDefaultElevationTolerance) {
  if (targets.empty()) throw UsageError("select_positions: empty target list");
  if (az_tol_deg < 0.0 || el_tol_deg < 0.0) throw UsageError("select_positions: negative tolerance");
  HrirCorpus out = corpus;
  for (auto& subject : out.subjects) {
    for (auto& ear : subject.ears) {
      Matrix<float> rows;
      std::vector<Position> kept;
      for (const auto& target : targets) {
        auto idx = match_position(ear.positions, target, az_tol_deg, el_tol_deg);
        if (!idx) {
          std::ostringstream msg;
          msg << "position not found: corpus '" << corpus.name << "' subject '" << subject.id << "' ear "
              << to_string(ear.source_side) << " target (az " << target.azimuth_deg << ", el "
              << target.elevation_deg << ")";
          throw DataError(msg.str());
        }
        rows.append_row(ear.hrir.row(*idx));
        kept.push_back(ear.positions[*idx]);
      }
      ear.hrir = std::move(rows);
      ear.positions = std::move(kept);
    }
  }
  return out;
}

}  // namespace hrtfprint
