#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "hrtfprint/experiments.hpp"
#include "hrtfprint/report.hpp"
#include "hrtfprint/synth.hpp"
#include "test_util.hpp"

using namespace hrtfprint;
using hrtfprint::testing::TempDir;

namespace {

// A full-band (0 Hz to Nyquist) feature set at the common-ground grid with
// random magnitudes; `offset` shifts every value to make classes separable.
HarmonizedFeatureSet fake_set(const std::string& name, std::size_t n_subjects, double offset, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  HarmonizedFeatureSet s;
  s.dataset_name = name;
  s.source_fs_hz = 44100.0;
  s.source_len = 235;
  s.config.band = {0.0, 22050.0};
  for (const auto& p : horizontal_ring_positions()) s.azimuths_deg.push_back(p.azimuth_deg);
  for (std::size_t k = 0; k <= 117; ++k) {
    s.bin_indices.push_back(k);
    s.bin_frequencies_hz.push_back(static_cast<double>(k) * 44100.0 / 235.0);
  }
  for (std::size_t i = 0; i < n_subjects; ++i)
    for (EarSide side : {EarSide::left, EarSide::right}) {
      FeatureEntry e;
      e.subject_id = "subj" + std::to_string(i);
      e.source_side = side;
      e.magnitudes = Matrix<double>(12, 118);
      for (auto& v : e.magnitudes.data()) v = u(rng) + offset;
      s.entries.push_back(std::move(e));
    }
  return s;
}

std::vector<HarmonizedFeatureSet> fake_sets(std::size_t n_sets, std::size_t n_subjects, double step) {
  std::vector<HarmonizedFeatureSet> out;
  for (std::size_t j = 0; j < n_sets; ++j)
    out.push_back(fake_set("set" + std::to_string(j), n_subjects, step * static_cast<double>(j), 100 + j));
  return out;
}

ExperimentConfig quick_config(ExperimentMode mode = ExperimentMode::full_matrix) {
  ExperimentConfig cfg;
  cfg.mode = mode;
  cfg.params.gbt.n_rounds = 10;
  return cfg;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, ChecksAndJsonRoundTrip) {
  ExperimentConfig cfg;
  EXPECT_NO_THROW(cfg.check());
  cfg.k_folds = 1;
  EXPECT_THROW(cfg.check(), UsageError);
  cfg = {};
  cfg.n_per_class = 35;
  EXPECT_THROW(cfg.check(), UsageError);
  cfg = {};
  cfg.jobs = 0;
  EXPECT_THROW(cfg.check(), UsageError);

  cfg = {};
  cfg.mode = ExperimentMode::per_position;
  cfg.model = ml::ModelKind::rbfsvm;
  cfg.band = {5000.0, 15000.0};
  cfg.seed = 123456789012345ULL;
  cfg.label_permutation_seed = 9;
  cfg.params.rbfsvm.gamma = 0.25;
  const auto back = experiment_config_from_json(to_json(cfg));
  EXPECT_EQ(to_json(back), to_json(cfg));
  EXPECT_EQ(back.seed, cfg.seed);
  EXPECT_EQ(*back.label_permutation_seed, 9u);
  EXPECT_FALSE(to_json(cfg).contains("jobs"));
  EXPECT_EQ(parse_experiment_mode("per-position"), ExperimentMode::per_position);
  EXPECT_EQ(parse_experiment_mode("full"), ExperimentMode::full_matrix);
  EXPECT_THROW(parse_experiment_mode("diagonal"), UsageError);
}

TEST(Balance, KeepsFirstEntriesOfEverySet) {
  std::vector<HarmonizedFeatureSet> sets;
  for (std::size_t j = 0; j < 10; ++j) sets.push_back(fake_set("d" + std::to_string(j), 18 + 3 * j, 0.0, j));
  const auto out = balance_classes(sets, 36);
  std::size_t total = 0;
  for (std::size_t j = 0; j < out.size(); ++j) {
    total += out[j].entries.size();
    for (std::size_t i = 0; i < 36; ++i) EXPECT_EQ(out[j].entries[i], sets[j].entries[i]);
    std::map<std::string, int> per_subject;
    for (const auto& e : out[j].entries) ++per_subject[e.subject_id];
    for (const auto& [id, count] : per_subject) EXPECT_EQ(count, 2) << id;
  }
  EXPECT_EQ(total, 360u);
  EXPECT_EQ(balance_classes({sets[0]}, 36)[0].entries, sets[0].entries);
}

TEST(Balance, Errors) {
  const auto s = fake_set("small", 10, 0.0, 1);
  EXPECT_THROW(balance_classes({s}, 22), DataError);
  EXPECT_THROW(balance_classes({s}, 7), DataError);  // would split subj3
}

TEST(DesignMatrix, FullMatrixShapeAndLayout) {
  auto sets = balance_classes(fake_sets(10, 18, 0.0), 36);
  for (auto& s : sets) s = reslice(s, kDefaultBand);
  const auto d = build_design_matrix(sets, ExperimentMode::full_matrix);
  EXPECT_EQ(d.n_samples(), 360u);
  EXPECT_EQ(d.n_features(), 1140u);
  EXPECT_EQ(d.feature_names[0], "az0/f187");
  EXPECT_EQ(d.feature_names[95], "az30/f187");
  EXPECT_EQ(d.feature_names[11 * 95], "az-30/f187");
  EXPECT_EQ(d.feature_names[26], "az0/f5066");
  // Azimuth-major: feature a*95+b is magnitude (a, b) of the entry.
  EXPECT_EQ(d.rows(0, 3 * 95 + 7), sets[0].entries[0].magnitudes(3, 7));
  std::set<int> groups(d.groups.begin(), d.groups.end());
  EXPECT_EQ(groups.size(), 180u);
  for (std::size_t i = 0; i < 360; i += 2) EXPECT_EQ(d.groups[i], d.groups[i + 1]);
}

TEST(DesignMatrix, PerPositionShape) {
  auto sets = balance_classes(fake_sets(10, 18, 0.0), 36);
  for (auto& s : sets) s = reslice(s, kDefaultBand);
  const auto d = build_design_matrix(sets, ExperimentMode::per_position);
  EXPECT_EQ(d.n_samples(), 4320u);
  EXPECT_EQ(d.n_features(), 95u);
  EXPECT_EQ(d.feature_names[0], "f187");
  std::map<int, int> per_class, per_group;
  for (int l : d.labels) ++per_class[l];
  for (int g : d.groups) ++per_group[g];
  for (const auto& [c, n] : per_class) EXPECT_EQ(n, 432);
  for (const auto& [g, n] : per_group) EXPECT_EQ(n, 24);

  auto one = fake_set("one", 1, 0.0, 3);
  one.entries.resize(1);
  const auto d1 = build_design_matrix({one}, ExperimentMode::per_position);
  EXPECT_EQ(d1.n_samples(), 12u);
  EXPECT_EQ(std::set<int>(d1.groups.begin(), d1.groups.end()).size(), 1u);
}

TEST(DesignMatrix, LabelsFollowDatasetNameOrder) {
  auto a = fake_set("zeta", 2, 0.0, 1), b = fake_set("alpha", 2, 0.0, 2);
  const auto d = build_design_matrix({a, b}, ExperimentMode::full_matrix);
  EXPECT_EQ(d.class_names, (std::vector<std::string>{"alpha", "zeta"}));
  EXPECT_EQ(d.rows(0, 0), b.entries[0].magnitudes(0, 0));
}

TEST(DesignMatrix, RejectsMismatchedGridsAndDuplicateNames) {
  auto a = fake_set("a", 2, 0.0, 1), b = fake_set("b", 2, 0.0, 2);
  auto narrow = reslice(b, kDefaultBand);
  EXPECT_THROW(build_design_matrix({a, narrow}, ExperimentMode::full_matrix), DataError);
  auto c = a;
  EXPECT_THROW(build_design_matrix({a, c}, ExperimentMode::full_matrix), DataError);
  auto shifted = b;
  shifted.azimuths_deg[3] += 1.0;
  EXPECT_THROW(build_design_matrix({a, shifted}, ExperimentMode::full_matrix), DataError);
}

TEST(Permutation, KeepsGroupsIntactAndClassSizes) {
  std::vector<int> groups, labels;
  for (int g = 0; g < 40; ++g)
    for (int r = 0; r < 3; ++r) {
      groups.push_back(g);
      labels.push_back(g % 4);
    }
  const auto p = permute_labels_by_group(groups, labels, 5);
  std::map<int, int> group_label;
  std::map<int, int> count;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    auto [it, inserted] = group_label.emplace(groups[i], p[i]);
    EXPECT_EQ(it->second, p[i]);
    if (inserted) ++count[p[i]];
  }
  for (const auto& [c, n] : count) EXPECT_EQ(n, 10);
  EXPECT_NE(p, labels);
  EXPECT_EQ(p, permute_labels_by_group(groups, labels, 5));
}

TEST(RunExperiment, ReportInvariants) {
  const auto sets = fake_sets(4, 10, 0.05);
  auto cfg = quick_config();
  cfg.n_per_class = 20;
  const auto r = run_experiment(sets, cfg);
  EXPECT_EQ(r.n_samples, 80u);
  EXPECT_EQ(r.n_features, 1140u);
  ASSERT_EQ(r.confusion.rows(), 4u);
  long trace = 0, total = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    long row = 0;
    for (std::size_t j = 0; j < 4; ++j) row += r.confusion(i, j);
    EXPECT_EQ(row, 20);
    trace += r.confusion(i, i);
    total += row;
  }
  EXPECT_DOUBLE_EQ(r.mean_accuracy, static_cast<double>(trace) / static_cast<double>(total));
  EXPECT_EQ(r.fold_accuracies.size(), 5u);
  EXPECT_EQ(std::accumulate(r.fold_test_sizes.begin(), r.fold_test_sizes.end(), std::size_t{0}), 80u);
  ASSERT_TRUE(r.has_importance());
  EXPECT_EQ(r.fold_importances.size(), 5u);
  EXPECT_EQ(r.frequency_importance.size(), 95u);
  EXPECT_NEAR(std::accumulate(r.frequency_importance.begin(), r.frequency_importance.end(), 0.0), 1.0, 1e-9);
  EXPECT_EQ(r.azimuths_deg.size(), 12u);
  EXPECT_EQ(r.bin_frequencies_hz.size(), 95u);
}

TEST(RunExperiment, NoGroupStraddlesFolds) {
  for (auto mode : {ExperimentMode::full_matrix, ExperimentMode::per_position}) {
    auto cfg = quick_config(mode);
    cfg.model = ml::ModelKind::cart;
    cfg.n_per_class = 16;
    const auto r = run_experiment(fake_sets(3, 8, 0.1), cfg);
    std::map<std::string, std::size_t> fold_of;
    std::size_t n_groups = 0;
    for (std::size_t f = 0; f < r.fold_groups.size(); ++f)
      for (const auto& g : r.fold_groups[f]) {
        auto [it, inserted] = fold_of.emplace(g, f);
        EXPECT_TRUE(inserted) << g << " appears in two folds";
        ++n_groups;
      }
    EXPECT_EQ(n_groups, 24u);
    if (mode == ExperimentMode::per_position) {
      for (auto size : r.fold_test_sizes) EXPECT_EQ(size % 24, 0u);
    }
  }
}

TEST(RunExperiment, BandEchoAndFeatureCount) {
  auto cfg = quick_config(ExperimentMode::per_position);
  cfg.n_per_class = 8;
  cfg.band = {5000.0, 15000.0};
  const auto r = run_experiment(fake_sets(2, 4, 0.1), cfg);
  EXPECT_EQ(r.n_features, 53u);
  EXPECT_EQ(to_json(r)["config"]["band_lo_hz"], 5000.0);
  EXPECT_EQ(to_json(r)["config"]["include_dc"], false);
}

TEST(RunExperiment, ResultsDoNotDependOnJobs) {
  auto cfg = quick_config();
  cfg.n_per_class = 16;
  const auto sets = fake_sets(3, 8, 0.02);
  const auto a = run_experiment(sets, cfg);
  cfg.jobs = 4;
  const auto b = run_experiment(sets, cfg);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(RunExperiment, EveryModelRuns) {
  // Each set is lifted along its own azimuth row; a common offset would put
  // the classes on one line, which one-vs-rest linear models cannot split.
  auto sets = fake_sets(3, 8, 0.0);
  for (std::size_t j = 0; j < sets.size(); ++j)
    for (auto& e : sets[j].entries)
      for (auto& v : e.magnitudes.row(j)) v += 1.0;
  for (auto model : {ml::ModelKind::cart, ml::ModelKind::gbt, ml::ModelKind::linsvm, ml::ModelKind::rbfsvm}) {
    auto cfg = quick_config();
    cfg.model = model;
    cfg.n_per_class = 16;
    const auto r = run_experiment(sets, cfg);
    EXPECT_GE(r.mean_accuracy, 0.9) << ml::to_string(model);
    EXPECT_EQ(r.has_importance(), ml::is_tree_model(model));
  }
}

TEST(RunExperiment, NeedsTwoDatasets) {
  EXPECT_THROW(run_experiment(fake_sets(1, 18, 0.0), quick_config()), DataError);
}

TEST(RunExperiment, NullSyntheticPairIsAtChance) {
  const auto profiles = synth::default_profiles(2, synth::Distinctness::null, 4);
  std::vector<HarmonizedFeatureSet> sets;
  for (const auto& p : profiles) sets.push_back(harmonize_corpus(synth::synth_corpus(p, 18, 5)));
  ExperimentConfig cfg;
  cfg.seed = 1;
  const auto r = run_experiment(sets, cfg);
  EXPECT_NEAR(r.chance.lo, 0.5, 0.15);
  EXPECT_TRUE(r.chance.contains(r.mean_accuracy))
      << r.mean_accuracy << " outside [" << r.chance.lo << ", " << r.chance.hi << "]";
}

TEST(RunExperiment, StrongSyntheticPairIsSeparated) {
  const auto profiles = synth::default_profiles(2, synth::Distinctness::strong, 4);
  std::vector<HarmonizedFeatureSet> sets;
  for (const auto& p : profiles) sets.push_back(harmonize_corpus(synth::synth_corpus(p, 18, 5)));
  ExperimentConfig cfg;
  cfg.seed = 1;
  EXPECT_GE(run_experiment(sets, cfg).mean_accuracy, 0.9);
}

TEST(Ablation, FiveBandsShareFolds) {
  auto base = quick_config(ExperimentMode::per_position);
  base.n_per_class = 8;
  base.model = ml::ModelKind::cart;
  const auto reports = run_ablation_suite(fake_sets(3, 4, 0.05), base);
  ASSERT_EQ(reports.size(), 5u);
  const std::size_t want[] = {95, 118, 79, 91, 53};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(reports[i].n_features, want[i]);
    EXPECT_EQ(reports[i].fold_groups, reports[0].fold_groups);
    EXPECT_EQ(reports[i].config.seed, base.seed);
    EXPECT_EQ(reports[i].config.band, ablation_bands()[i]);
  }
}

TEST(Report, ExportedFilesAgreeWithReport) {
  auto cfg = quick_config();
  cfg.n_per_class = 16;
  const auto r = run_experiment(fake_sets(3, 8, 0.02), cfg);
  TempDir dir("report");
  export_report(r, dir.path(), true);
  for (const char* f : {"report.json", "confusion.csv", "importance.csv", "confusion.svg", "importance.svg"})
    EXPECT_TRUE(std::filesystem::exists(dir.path() / f)) << f;

  const auto back = load_report(dir.path() / "report.json");
  EXPECT_EQ(back.mean_accuracy, r.mean_accuracy);
  EXPECT_EQ(back.confusion, r.confusion);
  EXPECT_EQ(back.frequency_importance, r.frequency_importance);
  EXPECT_EQ(to_json(back).dump(), to_json(r).dump());

  std::istringstream csv(read_file(dir.path() / "confusion.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "true\\predicted,set0,set1,set2");
  while (std::getline(csv, line)) {
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');
    long sum = 0;
    while (std::getline(cells, cell, ',')) sum += std::stol(cell);
    EXPECT_EQ(sum, 16);
  }

  std::istringstream imp(read_file(dir.path() / "importance.csv"));
  std::getline(imp, line);
  EXPECT_EQ(line, "frequency_hz,mean_importance");
  double total = 0.0;
  std::size_t rows = 0;
  while (std::getline(imp, line)) {
    total += std::stod(line.substr(line.find(',') + 1));
    ++rows;
  }
  EXPECT_EQ(rows, 95u);
  EXPECT_NEAR(total, 1.0, 1e-6);
}

TEST(Report, SvmReportHasEmptyImportance) {
  auto cfg = quick_config();
  cfg.model = ml::ModelKind::linsvm;
  cfg.n_per_class = 16;
  const auto r = run_experiment(fake_sets(2, 8, 0.5), cfg);
  EXPECT_FALSE(r.has_importance());
  EXPECT_EQ(importance_csv(r), "frequency_hz,mean_importance\n");
}

TEST(Report, AblationExportWritesBandDirectories) {
  auto base = quick_config(ExperimentMode::per_position);
  base.n_per_class = 8;
  base.model = ml::ModelKind::cart;
  const auto reports = run_ablation_suite(fake_sets(2, 4, 0.05), base);
  TempDir dir("ablation");
  export_ablation(reports, dir.path());
  for (const char* sub : {"band_1-18000", "band_0-22050", "band_1-15000", "band_5000-22050", "band_5000-15000"})
    EXPECT_TRUE(std::filesystem::exists(dir.path() / sub / "report.json")) << sub;
  const auto summary = nlohmann::json::parse(read_file(dir.path() / "summary.json"));
  ASSERT_EQ(summary.size(), 5u);
  EXPECT_EQ(summary[4]["n_features"], 53);
}

TEST(Report, MalformedReportIsDataError) {
  TempDir dir("badreport");
  std::ofstream(dir.path() / "report.json") << "{\"schema_version\": 1}";
  EXPECT_THROW(load_report(dir.path() / "report.json"), DataError);
}
