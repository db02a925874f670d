#pragma once

// On-disk corpus format: a directory holding manifest.json and one raw
// little-endian float32 payload per subject-ear, row-major
// [position][sample] with no header.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrtfprint/corpus.hpp"

namespace hrtfprint {

inline constexpr int kCorpusSchemaVersion = 1;

namespace detail {

inline std::vector<float> read_f32_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw DataError("cannot open payload " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  if (size % 4 != 0) throw DataError("payload size mismatch: " + path.string() + " is not a whole number of floats");
  std::vector<float> out(size / 4);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(size));
  if (!in) throw DataError("short read on " + path.string());
  if constexpr (std::endian::native == std::endian::big) {
    for (auto& v : out) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      bits = __builtin_bswap32(bits);
      std::memcpy(&v, &bits, 4);
    }
  }
  return out;
}

inline void write_f32_file(const std::filesystem::path& path, const std::vector<float>& values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  if constexpr (std::endian::native == std::endian::big) {
    for (float v : values) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      bits = __builtin_bswap32(bits);
      out.write(reinterpret_cast<const char*>(&bits), 4);
    }
  } else {
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * 4));
  }
  if (!out) throw DataError("write failed for " + path.string());
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed " + path.filename().string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace detail

inline HrirCorpus load_corpus(const std::filesystem::path& dir) {
  const auto manifest = detail::read_json_file(dir / "manifest.json");
  HrirCorpus corpus;
  try {
    if (manifest.at("schema_version").get<int>() != kCorpusSchemaVersion)
      throw DataError("unsupported schema_version in " + (dir / "manifest.json").string());
    corpus.name = manifest.at("name").get<std::string>();
    corpus.samplerate_hz = manifest.at("samplerate_hz").get<int>();
    corpus.method = parse_method(manifest.at("method").get<std::string>());
    if (manifest.contains("radius_m") && !manifest["radius_m"].is_null())
      corpus.radius_m = manifest["radius_m"].get<double>();
    for (const auto& js : manifest.at("subjects")) {
      Subject subject;
      subject.id = js.at("id").get<std::string>();
      for (const auto& je : js.at("ears")) {
        EarRecording ear;
        ear.side = parse_ear_side(je.at("side").get<std::string>());
        ear.source_side = je.contains("source_side") ? parse_ear_side(je["source_side"].get<std::string>()) : ear.side;
        for (const auto& jp : je.at("positions")) {
          if (!jp.is_array() || jp.size() != 3) throw DataError("position entries must be [azimuth, elevation, distance]");
          std::optional<double> dist;
          if (!jp[2].is_null()) dist = jp[2].get<double>();
          const double az = jp[0].get<double>();
          const double el = jp[1].get<double>();
          if (!std::isfinite(az) || !std::isfinite(el)) throw DataError("non-finite position");
          ear.positions.emplace_back(az, el, dist);
        }
        const auto file = je.at("file").get<std::string>();
        auto samples = detail::read_f32_file(dir / file);
        const std::size_t n_pos = ear.positions.size();
        if (n_pos == 0) throw DataError("ear without positions in subject '" + subject.id + "'");
        if (samples.size() % n_pos != 0 || samples.empty())
          throw DataError("payload size mismatch: " + file + " holds " + std::to_string(samples.size()) +
                          " floats for " + std::to_string(n_pos) + " positions");
        const std::size_t n_samples = samples.size() / n_pos;
        ear.hrir = Matrix<float>(n_pos, n_samples, std::move(samples));
        subject.ears.push_back(std::move(ear));
      }
      corpus.subjects.push_back(std::move(subject));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed manifest: ") + e.what());
  }
  // Every ear must agree on n_samples; a payload that disagrees is reported
  // as a size mismatch against the first ear's shape.
  const std::size_t n = corpus.n_samples();
  for (const auto& s : corpus.subjects)
    for (const auto& e : s.ears)
      if (e.hrir.cols() != n)
        throw DataError("payload size mismatch: subject '" + s.id + "' " + to_string(e.side) + " ear has " +
                        std::to_string(e.hrir.rows() * e.hrir.cols()) + " floats, expected " +
                        std::to_string(e.hrir.rows() * n));
  validate(corpus);
  return corpus;
}

inline std::string payload_file_name(const Subject& subject, const EarRecording& ear) {
  std::string id = subject.id;
  for (char& c : id)
    if (c == '/' || c == '\\' || c == ':') c = '_';
  std::string name = id + "_" + to_string(ear.side);
  if (ear.side != ear.source_side) name += "_from_" + std::string(to_string(ear.source_side));
  return name + ".f32";
}

inline void save_corpus(const HrirCorpus& corpus, const std::filesystem::path& dir) {
  validate(corpus);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  nlohmann::json manifest;
  manifest["schema_version"] = kCorpusSchemaVersion;
  manifest["name"] = corpus.name;
  manifest["samplerate_hz"] = corpus.samplerate_hz;
  manifest["method"] = to_string(corpus.method);
  manifest["radius_m"] = corpus.radius_m ? nlohmann::json(*corpus.radius_m) : nlohmann::json(nullptr);
  manifest["subjects"] = nlohmann::json::array();
  for (const auto& subject : corpus.subjects) {
    nlohmann::json js;
    js["id"] = subject.id;
    js["ears"] = nlohmann::json::array();
    for (const auto& ear : subject.ears) {
      nlohmann::json je;
      je["side"] = to_string(ear.side);
      if (ear.source_side != ear.side) je["source_side"] = to_string(ear.source_side);
      je["file"] = payload_file_name(subject, ear);
      je["positions"] = nlohmann::json::array();
      for (const auto& p : ear.positions)
        je["positions"].push_back({p.azimuth_deg, p.elevation_deg,
                                   p.distance_m ? nlohmann::json(*p.distance_m) : nlohmann::json(nullptr)});
      detail::write_f32_file(dir / je["file"].get<std::string>(), ear.hrir.data());
      js["ears"].push_back(std::move(je));
    }
    manifest["subjects"].push_back(std::move(js));
  }
  detail::write_json_file(dir / "manifest.json", manifest);
}

}  // namespace hrtfprint
