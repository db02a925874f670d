#pragma once

// Report serialisation: report.json, confusion.csv, importance.csv and
// optional SVG renderings. Numbers are written locale-independently.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrtfprint/corpus_io.hpp"
#include "hrtfprint/experiments.hpp"

namespace hrtfprint {

inline constexpr int kReportSchemaVersion = 1;

namespace detail {

// Shortest round-trip decimal form, independent of the C locale.
inline std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace detail

inline nlohmann::json to_json(const CvReport& r) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["config"] = to_json(r.config);
  j["class_names"] = r.class_names;
  j["n_samples"] = r.n_samples;
  j["n_features"] = r.n_features;
  j["feature_names"] = r.feature_names;
  j["bin_frequencies_hz"] = r.bin_frequencies_hz;
  j["azimuths_deg"] = r.azimuths_deg;
  j["fold_groups"] = r.fold_groups;
  j["fold_test_sizes"] = r.fold_test_sizes;
  j["fold_accuracies"] = r.fold_accuracies;
  j["fold_train_accuracies"] = r.fold_train_accuracies;
  j["mean_accuracy"] = r.mean_accuracy;
  j["mean_fold_accuracy"] = r.mean_fold_accuracy;
  nlohmann::json cm = nlohmann::json::array();
  for (std::size_t i = 0; i < r.confusion.rows(); ++i) {
    const auto row = r.confusion.row(i);
    cm.push_back(std::vector<long>(row.begin(), row.end()));
  }
  j["confusion"] = cm;
  j["chance_interval"] = {{"level", 0.95},
                          {"lo", r.chance.lo},
                          {"hi", r.chance.hi},
                          {"lo_count", r.chance.lo_count},
                          {"hi_count", r.chance.hi_count}};
  j["converged"] = r.converged;
  j["fold_importances"] = r.fold_importances;
  j["mean_importance"] = r.mean_importance;
  j["frequency_importance"] = r.frequency_importance;
  return j;
}

inline CvReport cv_report_from_json(const nlohmann::json& j) {
  if (j.value("schema_version", 0) != kReportSchemaVersion) throw DataError("unsupported report schema_version");
  CvReport r;
  r.config = experiment_config_from_json(j.at("config"));
  r.class_names = j.at("class_names").get<std::vector<std::string>>();
  r.n_samples = j.at("n_samples").get<std::size_t>();
  r.n_features = j.at("n_features").get<std::size_t>();
  r.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  r.bin_frequencies_hz = j.at("bin_frequencies_hz").get<std::vector<double>>();
  r.azimuths_deg = j.at("azimuths_deg").get<std::vector<double>>();
  r.fold_groups = j.at("fold_groups").get<std::vector<std::vector<std::string>>>();
  r.fold_test_sizes = j.at("fold_test_sizes").get<std::vector<std::size_t>>();
  r.fold_accuracies = j.at("fold_accuracies").get<std::vector<double>>();
  r.fold_train_accuracies = j.at("fold_train_accuracies").get<std::vector<double>>();
  r.mean_accuracy = j.at("mean_accuracy").get<double>();
  r.mean_fold_accuracy = j.at("mean_fold_accuracy").get<double>();
  const auto rows = j.at("confusion").get<std::vector<std::vector<long>>>();
  r.confusion = Matrix<long>(rows.size(), rows.size(), 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) throw DataError("confusion matrix is not square");
    for (std::size_t k = 0; k < rows.size(); ++k) r.confusion(i, k) = rows[i][k];
  }
  const auto& ci = j.at("chance_interval");
  r.chance = {ci.at("lo").get<double>(), ci.at("hi").get<double>(), ci.at("lo_count").get<std::size_t>(),
              ci.at("hi_count").get<std::size_t>()};
  r.converged = j.at("converged").get<bool>();
  r.fold_importances = j.at("fold_importances").get<std::vector<std::vector<double>>>();
  r.mean_importance = j.at("mean_importance").get<std::vector<double>>();
  r.frequency_importance = j.at("frequency_importance").get<std::vector<double>>();
  return r;
}

inline CvReport load_report(const std::filesystem::path& path) {
  try {
    return cv_report_from_json(detail::read_json_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline std::string confusion_csv(const CvReport& r) {
  std::string out = "true\\predicted";
  for (const auto& c : r.class_names) out += "," + detail::csv_field(c);
  out += "\n";
  for (std::size_t i = 0; i < r.confusion.rows(); ++i) {
    out += detail::csv_field(r.class_names[i]);
    for (std::size_t k = 0; k < r.confusion.cols(); ++k) out += "," + std::to_string(r.confusion(i, k));
    out += "\n";
  }
  return out;
}

// One line per frequency bin; empty (header only) for SVM reports.
inline std::string importance_csv(const CvReport& r) {
  std::string out = "frequency_hz,mean_importance\n";
  if (!r.has_importance()) return out;
  for (std::size_t b = 0; b < r.frequency_importance.size(); ++b)
    out += detail::format_number(r.bin_frequencies_hz[b]) + "," + detail::format_number(r.frequency_importance[b]) +
           "\n";
  return out;
}

inline std::string importance_svg(const CvReport& r) {
  constexpr double kWidth = 720, kHeight = 320, kLeft = 60, kBottom = 40, kTop = 30, kRight = 20;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << kLeft << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">"
    << detail::xml_escape(std::string(ml::to_string(r.config.model)) + " importance, " + to_string(r.config.mode) +
                          ", accuracy " + detail::format_number(std::round(r.mean_accuracy * 1000) / 1000))
    << "</text>\n";
  const auto& v = r.frequency_importance;
  if (!v.empty()) {
    const double peak = std::max(*std::max_element(v.begin(), v.end()), 1e-12);
    const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
    const double bar_w = plot_w / static_cast<double>(v.size());
    for (std::size_t b = 0; b < v.size(); ++b) {
      const double h = plot_h * v[b] / peak;
      s << "<rect x=\"" << detail::format_number(kLeft + bar_w * static_cast<double>(b)) << "\" y=\""
        << detail::format_number(kTop + plot_h - h) << "\" width=\"" << detail::format_number(bar_w * 0.9)
        << "\" height=\"" << detail::format_number(h) << "\" fill=\"steelblue\"><title>"
        << detail::format_number(r.bin_frequencies_hz[b]) << " Hz: " << detail::format_number(v[b])
        << "</title></rect>\n";
    }
    for (std::size_t b = 0; b < v.size(); b += std::max<std::size_t>(1, v.size() / 8))
      s << "<text x=\"" << detail::format_number(kLeft + bar_w * static_cast<double>(b)) << "\" y=\""
        << kHeight - kBottom + 16 << "\" font-family=\"sans-serif\" font-size=\"10\">"
        << detail::format_number(std::round(r.bin_frequencies_hz[b])) << "</text>\n";
    s << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 6
      << "\" font-family=\"sans-serif\" font-size=\"11\">frequency (Hz)</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

inline std::string confusion_svg(const CvReport& r) {
  const std::size_t n = r.confusion.rows();
  constexpr double kCell = 36, kMargin = 140;
  const double size = kMargin + kCell * static_cast<double>(n) + 20;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < n; ++i) {
    long row_total = 0;
    for (std::size_t k = 0; k < n; ++k) row_total += r.confusion(i, k);
    const std::string name = detail::xml_escape(r.class_names[i]);
    s << "<text x=\"4\" y=\"" << kMargin + kCell * (static_cast<double>(i) + 0.6)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << name << "</text>\n";
    s << "<text transform=\"translate(" << kMargin + kCell * (static_cast<double>(i) + 0.6) << " " << kMargin - 4
      << ") rotate(-60)\" font-family=\"sans-serif\" font-size=\"11\">" << name << "</text>\n";
    for (std::size_t k = 0; k < n; ++k) {
      const double frac = row_total > 0 ? static_cast<double>(r.confusion(i, k)) / static_cast<double>(row_total) : 0;
      const int shade = static_cast<int>(std::lround(255.0 * (1.0 - frac)));
      s << "<rect x=\"" << kMargin + kCell * static_cast<double>(k) << "\" y=\""
        << kMargin + kCell * static_cast<double>(i) << "\" width=\"" << kCell << "\" height=\"" << kCell
        << "\" fill=\"rgb(" << shade << "," << shade << ",255)\" stroke=\"#ccc\"/>\n";
      s << "<text x=\"" << kMargin + kCell * (static_cast<double>(k) + 0.5) << "\" y=\""
        << kMargin + kCell * (static_cast<double>(i) + 0.6)
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">" << r.confusion(i, k)
        << "</text>\n";
    }
  }
  s << "</svg>\n";
  return s.str();
}

inline void export_report(const CvReport& r, const std::filesystem::path& dir, bool svg = false) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  detail::write_text_file(dir / "report.json", to_json(r).dump(2) + "\n");
  detail::write_text_file(dir / "confusion.csv", confusion_csv(r));
  detail::write_text_file(dir / "importance.csv", importance_csv(r));
  if (svg) {
    detail::write_text_file(dir / "confusion.svg", confusion_svg(r));
    if (r.has_importance()) detail::write_text_file(dir / "importance.svg", importance_svg(r));
  }
}

// Directory name for an ablation band, e.g. "band_1-18000" or "band_0-22050".
inline std::string band_directory_name(const Band& b) {
  return "band_" + detail::format_number(b.lo_hz) + "-" + detail::format_number(b.hi_hz);
}

// Writes each report under its band directory plus a summary.json.
inline void export_ablation(const std::vector<CvReport>& reports, const std::filesystem::path& dir, bool svg = false) {
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& r : reports) {
    const auto sub = band_directory_name(r.config.band);
    export_report(r, dir / sub, svg);
    summary.push_back({{"directory", sub},
                       {"band_lo_hz", r.config.band.lo_hz},
                       {"band_hi_hz", r.config.band.hi_hz},
                       {"n_features", r.n_features},
                       {"mean_accuracy", r.mean_accuracy},
                       {"chance_hi", r.chance.hi}});
  }
  detail::write_text_file(dir / "summary.json", summary.dump(2) + "\n");
}

}  // namespace hrtfprint
