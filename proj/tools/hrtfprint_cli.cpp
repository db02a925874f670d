// hrtfprint command line: validate, harmonize, classify, ablate, synth.
//
// Exit codes: 0 success, 1 usage error, 2 data error. Every failure prints a
// single line on stderr.

#include <CLI11.hpp>

#include <charconv>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hrtfprint/hrtfprint.hpp"

namespace fs = std::filesystem;
using namespace hrtfprint;

namespace {

double parse_edge(const std::string& text, const std::string& whole) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw UsageError("bad --band value '" + whole + "', expected LO:HI in Hz");
  return v;
}

// "LO:HI" in Hz. Either side may be empty and keeps its default, so "0:"
// switches the DC bin on and leaves the upper edge at 18 kHz.
Band parse_band(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("bad --band value '" + text + "', expected LO:HI in Hz");
  Band b = kDefaultBand;
  const std::string lo = text.substr(0, colon), hi = text.substr(colon + 1);
  if (!lo.empty()) b.lo_hz = parse_edge(lo, text);
  if (!hi.empty()) b.hi_hz = parse_edge(hi, text);
  if (!(b.lo_hz >= 0.0 && b.lo_hz < b.hi_hz)) throw UsageError("band must satisfy 0 <= LO < HI, got '" + text + "'");
  return b;
}

std::vector<HarmonizedFeatureSet> load_feature_sets(const std::vector<std::string>& dirs) {
  std::vector<HarmonizedFeatureSet> sets;
  for (const auto& d : dirs) sets.push_back(load_features(d));
  return sets;
}

struct ModelFlags {
  std::optional<int> max_depth, min_samples_leaf, rounds;
  std::optional<double> learning_rate, c_reg, gamma, tol;

  void add_to(CLI::App* app) {
    app->add_option("--max-depth", max_depth, "Tree depth limit (CART 12, GBT 3)");
    app->add_option("--min-samples-leaf", min_samples_leaf, "Minimum rows per tree leaf");
    app->add_option("--rounds", rounds, "GBT boosting rounds");
    app->add_option("--learning-rate", learning_rate, "GBT shrinkage");
    app->add_option("--C", c_reg, "SVM regularisation constant");
    app->add_option("--gamma", gamma, "RBF kernel width; 0 picks it from the data");
    app->add_option("--tol", tol, "SVM stopping tolerance");
  }

  void apply(ModelParams& p) const {
    if (max_depth) p.cart.max_depth = p.gbt.max_depth = *max_depth;
    if (min_samples_leaf) p.cart.min_samples_leaf = p.gbt.min_samples_leaf = *min_samples_leaf;
    if (rounds) p.gbt.n_rounds = *rounds;
    if (learning_rate) p.gbt.learning_rate = *learning_rate;
    if (c_reg) p.linsvm.c_reg = p.rbfsvm.c_reg = *c_reg;
    if (gamma) p.rbfsvm.gamma = *gamma;
    if (tol) p.linsvm.tol = p.rbfsvm.tol = *tol;
  }
};

void print_summary(const CvReport& r) {
  std::cout << "mean accuracy " << r.mean_accuracy << " (chance interval " << r.chance.lo << " to " << r.chance.hi
            << ")\n";
}

int run(int argc, char** argv) {
  CLI::App app{"Harmonise HRIR corpora and test whether the measurement setup is identifiable."};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", "hrtfprint 0.1.0");

  // validate
  std::string validate_dir;
  auto* validate_cmd = app.add_subcommand("validate", "Check a corpus directory against the format invariants");
  validate_cmd->add_option("corpus", validate_dir, "Corpus directory")->required();

  // harmonize
  std::vector<std::string> harmonize_inputs;
  std::string harmonize_out, harmonize_band = "1:18000";
  HarmonizationConfig hcfg;
  bool use_db = false;
  auto* harmonize_cmd = app.add_subcommand("harmonize", "Convert corpora to magnitude feature sets");
  harmonize_cmd->add_option("corpus", harmonize_inputs, "Corpus directories")->required();
  harmonize_cmd->add_option("--out", harmonize_out, "Output directory, one feature set per corpus")->required();
  harmonize_cmd->add_option("--fs", hcfg.target_fs_hz, "Target sample rate in Hz")->capture_default_str();
  harmonize_cmd->add_option("--len", hcfg.target_len, "Target length in samples")->capture_default_str();
  harmonize_cmd->add_option("--band", harmonize_band, "Retained band LO:HI in Hz, 0: keeps DC")->capture_default_str();
  harmonize_cmd->add_flag("--db", use_db, "Store magnitudes in dB instead of linear");
  harmonize_cmd->add_option("--fade", hcfg.fade_samples, "Raised-cosine fade over the last N samples")
      ->capture_default_str();
  harmonize_cmd->add_flag("--scale-per-ear", hcfg.scale_per_ear, "Take the loudest measurement per ear");

  // classify
  std::vector<std::string> classify_inputs;
  std::string classify_out, model = "gbt", mode = "full", classify_band = "1:18000";
  ExperimentConfig ccfg;
  std::optional<std::uint64_t> permute_seed;
  bool classify_svg = false;
  ModelFlags classify_model;
  auto* classify_cmd = app.add_subcommand("classify", "Cross-validate a dataset classifier");
  classify_cmd->add_option("features", classify_inputs, "Feature set directories")->required();
  classify_cmd->add_option("--out", classify_out, "Report directory")->required();
  classify_cmd->add_option("--model", model, "cart, linsvm, rbfsvm or gbt")->capture_default_str();
  classify_cmd->add_option("--mode", mode, "full or per-position")->capture_default_str();
  classify_cmd->add_option("--folds", ccfg.k_folds, "Number of folds")->capture_default_str();
  classify_cmd->add_option("--n-per-class", ccfg.n_per_class, "Entries kept per dataset")->capture_default_str();
  classify_cmd->add_option("--band", classify_band, "Band LO:HI in Hz")->capture_default_str();
  classify_cmd->add_option("--seed", ccfg.seed, "Seed for folds and models")->capture_default_str();
  classify_cmd->add_option("--jobs", ccfg.jobs, "Worker threads")->capture_default_str();
  classify_cmd->add_option("--permute-labels", permute_seed, "Shuffle dataset labels across subjects first");
  classify_cmd->add_flag("--svg", classify_svg, "Also write SVG plots");
  classify_model.add_to(classify_cmd);

  // ablate
  std::vector<std::string> ablate_inputs;
  std::string ablate_out, ablate_model = "gbt", ablate_mode = "per-position";
  ExperimentConfig acfg;
  bool ablate_svg = false;
  ModelFlags ablate_model_flags;
  auto* ablate_cmd = app.add_subcommand("ablate", "Run the five frequency-band configurations");
  ablate_cmd->add_option("features", ablate_inputs, "Full-band feature set directories (harmonised with --band 0:22050)")
      ->required();
  ablate_cmd->add_option("--out", ablate_out, "Output directory")->required();
  ablate_cmd->add_option("--model", ablate_model, "cart, linsvm, rbfsvm or gbt")->capture_default_str();
  ablate_cmd->add_option("--mode", ablate_mode, "full or per-position")->capture_default_str();
  ablate_cmd->add_option("--folds", acfg.k_folds, "Number of folds")->capture_default_str();
  ablate_cmd->add_option("--n-per-class", acfg.n_per_class, "Entries kept per dataset")->capture_default_str();
  ablate_cmd->add_option("--seed", acfg.seed, "Seed for folds and models")->capture_default_str();
  ablate_cmd->add_option("--jobs", acfg.jobs, "Worker threads")->capture_default_str();
  ablate_cmd->add_flag("--svg", ablate_svg, "Also write SVG plots");
  ablate_model_flags.add_to(ablate_cmd);

  // synth
  std::string synth_out, distinctness = "strong";
  std::size_t n_datasets = 10, n_subjects = 18;
  std::uint64_t synth_seed = 0;
  auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic corpora with setup artifacts");
  synth_cmd->add_option("--profiles", distinctness, "null, mild or strong")->capture_default_str();
  synth_cmd->add_option("--datasets", n_datasets, "Number of corpora")->capture_default_str();
  synth_cmd->add_option("--subjects", n_subjects, "Subjects per corpus")->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    std::cout << app.version() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (*validate_cmd) {
    const auto corpus = load_corpus(validate_dir);
    validate(corpus);
    std::cout << corpus.name << ": " << corpus.subjects.size() << " subjects, " << corpus.samplerate_hz << " Hz, "
              << corpus.n_samples() << " samples\n";
    return 0;
  }

  if (*harmonize_cmd) {
    hcfg.band = parse_band(harmonize_band);
    hcfg.magnitude_scale = use_db ? MagnitudeScale::db : MagnitudeScale::linear;
    hcfg.check();
    // Load everything first so a bad input leaves no partial output behind.
    std::vector<HrirCorpus> corpora;
    for (const auto& dir : harmonize_inputs) corpora.push_back(load_corpus(dir));
    for (const auto& corpus : corpora) {
      const auto set = harmonize_corpus(corpus, hcfg);
      const fs::path dir = fs::path(harmonize_out) / set.dataset_name;
      save_features(set, dir);
      std::cout << dir.string() << ": " << set.entries.size() << " entries, " << set.n_azimuths() << " x "
                << set.n_bins() << "\n";
    }
    return 0;
  }

  if (*classify_cmd) {
    ccfg.model = ml::parse_model_kind(model);
    ccfg.mode = parse_experiment_mode(mode);
    ccfg.band = parse_band(classify_band);
    ccfg.label_permutation_seed = permute_seed;
    classify_model.apply(ccfg.params);
    ccfg.check();
    const auto report = run_experiment(load_feature_sets(classify_inputs), ccfg);
    export_report(report, classify_out, classify_svg);
    print_summary(report);
    return 0;
  }

  if (*ablate_cmd) {
    acfg.model = ml::parse_model_kind(ablate_model);
    acfg.mode = parse_experiment_mode(ablate_mode);
    ablate_model_flags.apply(acfg.params);
    acfg.check();
    const auto reports = run_ablation_suite(load_feature_sets(ablate_inputs), acfg);
    export_ablation(reports, ablate_out, ablate_svg);
    for (const auto& r : reports)
      std::cout << band_directory_name(r.config.band) << ": " << r.mean_accuracy << "\n";
    return 0;
  }

  if (*synth_cmd) {
    if (n_datasets == 0 || n_subjects == 0) throw UsageError("--datasets and --subjects must be positive");
    const auto profiles = synth::default_profiles(n_datasets, synth::parse_distinctness(distinctness), synth_seed);
    fs::create_directories(synth_out);
    for (const auto& p : profiles) save_corpus(synth::synth_corpus(p, n_subjects, synth_seed), fs::path(synth_out) / p.name);
    synth::save_profiles(profiles, fs::path(synth_out) / "profiles.json");
    std::cout << "wrote " << profiles.size() << " corpora to " << synth_out << "\n";
    return 0;
  }
  return 1;
}

// Keep diagnostics on one line whatever the exception text holds.
std::string one_line(std::string s) {
  for (auto& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "hrtfprint: usage error: " << one_line(e.what()) << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "hrtfprint: data error: " << one_line(e.what()) << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "hrtfprint: data error: " << one_line(e.what()) << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "hrtfprint: error: " << one_line(e.what()) << "\n";
    return 2;
  }
}
