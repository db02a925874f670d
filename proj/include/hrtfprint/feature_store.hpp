#pragma once

// Harmonised feature store: features.json (metadata, config echo, entry
// index) next to features.f32 (little-endian float32, entries in order,
// each [azimuth x bin] matrix row-major).

#include <filesystem>
#include <string>

#include <json.hpp>

#include "hrtfprint/corpus_io.hpp"
#include "hrtfprint/harmonize.hpp"

namespace hrtfprint {

inline constexpr int kFeatureSchemaVersion = 1;

inline nlohmann::json to_json(const HarmonizationConfig& cfg) {
  nlohmann::json j;
  j["target_fs_hz"] = cfg.target_fs_hz;
  j["target_len"] = cfg.target_len;
  j["target_positions"] = nlohmann::json::array();
  for (const auto& p : cfg.target_azimuths) j["target_positions"].push_back({p.azimuth_deg, p.elevation_deg});
  j["band_lo_hz"] = cfg.band.lo_hz;
  j["band_hi_hz"] = cfg.band.hi_hz;
  j["include_dc"] = cfg.band.includes_dc();
  j["magnitude_scale"] = to_string(cfg.magnitude_scale);
  j["az_tol_deg"] = cfg.az_tol_deg;
  j["el_tol_deg"] = cfg.el_tol_deg;
  j["fade_samples"] = cfg.fade_samples;
  j["scale_per_ear"] = cfg.scale_per_ear;
  j["min_phase_tolerance"] = cfg.min_phase_tolerance;
  return j;
}

inline HarmonizationConfig harmonization_config_from_json(const nlohmann::json& j) {
  HarmonizationConfig cfg;
  cfg.target_fs_hz = j.at("target_fs_hz").get<int>();
  cfg.target_len = j.at("target_len").get<std::size_t>();
  cfg.target_azimuths.clear();
  for (const auto& p : j.at("target_positions")) cfg.target_azimuths.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
  cfg.band = {j.at("band_lo_hz").get<double>(), j.at("band_hi_hz").get<double>()};
  cfg.magnitude_scale = parse_magnitude_scale(j.at("magnitude_scale").get<std::string>());
  cfg.az_tol_deg = j.at("az_tol_deg").get<double>();
  cfg.el_tol_deg = j.at("el_tol_deg").get<double>();
  cfg.fade_samples = j.value("fade_samples", std::size_t{0});
  cfg.scale_per_ear = j.value("scale_per_ear", false);
  cfg.min_phase_tolerance = j.value("min_phase_tolerance", HarmonizationConfig{}.min_phase_tolerance);
  return cfg;
}

inline void save_features(const HarmonizedFeatureSet& set, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json j;
  j["schema_version"] = kFeatureSchemaVersion;
  j["dataset_name"] = set.dataset_name;
  j["config"] = to_json(set.config);
  j["azimuths_deg"] = set.azimuths_deg;
  j["bin_frequencies_hz"] = set.bin_frequencies_hz;
  j["bin_indices"] = set.bin_indices;
  j["source_fs_hz"] = set.source_fs_hz;
  j["source_len"] = set.source_len;
  j["scale_factor"] = set.scale_factor;
  j["magnitude_scale"] = to_string(set.magnitude_scale);
  j["n_azimuths"] = set.n_azimuths();
  j["n_bins"] = set.n_bins();
  j["payload"] = "features.f32";
  j["entries"] = nlohmann::json::array();
  std::vector<float> payload;
  payload.reserve(set.entries.size() * set.n_azimuths() * set.n_bins());
  for (const auto& e : set.entries) {
    j["entries"].push_back({{"subject_id", e.subject_id}, {"source_side", to_string(e.source_side)}});
    for (double v : e.magnitudes.data()) payload.push_back(static_cast<float>(v));
  }
  detail::write_f32_file(dir / "features.f32", payload);
  detail::write_json_file(dir / "features.json", j);
}

inline HarmonizedFeatureSet load_features(const std::filesystem::path& dir) {
  const auto j = detail::read_json_file(dir / "features.json");
  HarmonizedFeatureSet set;
  try {
    if (j.at("schema_version").get<int>() != kFeatureSchemaVersion)
      throw DataError("unsupported feature schema in " + dir.string());
    set.dataset_name = j.at("dataset_name").get<std::string>();
    set.config = harmonization_config_from_json(j.at("config"));
    set.azimuths_deg = j.at("azimuths_deg").get<std::vector<double>>();
    set.bin_frequencies_hz = j.at("bin_frequencies_hz").get<std::vector<double>>();
    set.bin_indices = j.at("bin_indices").get<std::vector<std::size_t>>();
    set.source_fs_hz = j.at("source_fs_hz").get<double>();
    set.source_len = j.at("source_len").get<std::size_t>();
    set.scale_factor = j.at("scale_factor").get<double>();
    set.magnitude_scale = parse_magnitude_scale(j.at("magnitude_scale").get<std::string>());
    const auto payload = detail::read_f32_file(dir / j.value("payload", std::string("features.f32")));
    const std::size_t n_az = set.azimuths_deg.size(), n_bins = set.bin_indices.size();
    if (set.bin_frequencies_hz.size() != n_bins) throw DataError("bin frequency/index count mismatch");
    const auto& entries = j.at("entries");
    if (payload.size() != entries.size() * n_az * n_bins)
      throw DataError("payload size mismatch in " + (dir / "features.f32").string());
    std::size_t offset = 0;
    for (const auto& je : entries) {
      FeatureEntry e;
      e.subject_id = je.at("subject_id").get<std::string>();
      e.source_side = parse_ear_side(je.at("source_side").get<std::string>());
      std::vector<double> values(payload.begin() + static_cast<std::ptrdiff_t>(offset),
                                 payload.begin() + static_cast<std::ptrdiff_t>(offset + n_az * n_bins));
      offset += n_az * n_bins;
      for (double v : values)
        if (!std::isfinite(v)) throw DataError("non-finite feature value in " + dir.string());
      e.magnitudes = Matrix<double>(n_az, n_bins, std::move(values));
      set.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed features.json: ") + e.what());
  }
  return set;
}

}  // namespace hrtfprint
