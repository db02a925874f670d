#pragma once

// Dataset-identification experiments: balancing, design-matrix assembly,
// grouped cross-validation and the frequency-band ablation suite.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hrtfprint/feature_store.hpp"
#include "hrtfprint/harmonize.hpp"
#include "hrtfprint/ml/cv.hpp"
#include "hrtfprint/ml/design_matrix.hpp"
#include "hrtfprint/ml/model.hpp"

namespace hrtfprint {

enum class ExperimentMode { full_matrix, per_position };

inline const char* to_string(ExperimentMode m) { return m == ExperimentMode::full_matrix ? "full" : "per-position"; }

inline ExperimentMode parse_experiment_mode(const std::string& s) {
  if (s == "full" || s == "full_matrix") return ExperimentMode::full_matrix;
  if (s == "per-position" || s == "per_position") return ExperimentMode::per_position;
  throw UsageError("unknown mode '" + s + "' (expected full or per-position)");
}

struct ModelParams {
  ml::CartParams cart;
  ml::GbtParams gbt;
  ml::LinearSvmParams linsvm;
  ml::RbfSvmParams rbfsvm;
};

struct ExperimentConfig {
  ExperimentMode mode = ExperimentMode::full_matrix;
  ml::ModelKind model = ml::ModelKind::gbt;
  Band band = kDefaultBand;
  int k_folds = 5;
  std::size_t n_per_class = 36;
  std::uint64_t seed = 0;
  ModelParams params;
  // When set, class labels are shuffled across groups before splitting.
  std::optional<std::uint64_t> label_permutation_seed;
  // Worker threads for fold training. Does not affect results.
  unsigned jobs = 1;

  void check() const {
    if (k_folds < 2) throw UsageError("k_folds must be >= 2");
    if (n_per_class == 0 || n_per_class % 2 != 0) throw UsageError("n_per_class must be a positive even number");
    if (!(band.lo_hz >= 0.0 && band.lo_hz < band.hi_hz)) throw UsageError("band must satisfy 0 <= lo < hi");
    if (jobs == 0) throw UsageError("jobs must be >= 1");
  }
};

inline nlohmann::json to_json(const ModelParams& p) {
  return {
      {"cart", {{"max_depth", p.cart.max_depth}, {"min_samples_leaf", p.cart.min_samples_leaf}}},
      {"gbt",
       {{"n_rounds", p.gbt.n_rounds},
        {"learning_rate", p.gbt.learning_rate},
        {"max_depth", p.gbt.max_depth},
        {"min_samples_leaf", p.gbt.min_samples_leaf}}},
      {"linsvm", {{"c_reg", p.linsvm.c_reg}, {"max_iter", p.linsvm.max_iter}, {"tol", p.linsvm.tol}}},
      {"rbfsvm",
       {{"c_reg", p.rbfsvm.c_reg}, {"gamma", p.rbfsvm.gamma}, {"tol", p.rbfsvm.tol}, {"max_iter", p.rbfsvm.max_iter}}},
  };
}

inline ModelParams model_params_from_json(const nlohmann::json& j) {
  ModelParams p;
  const auto& c = j.at("cart");
  p.cart = {c.at("max_depth").get<int>(), c.at("min_samples_leaf").get<int>()};
  const auto& g = j.at("gbt");
  p.gbt = {g.at("n_rounds").get<int>(), g.at("learning_rate").get<double>(), g.at("max_depth").get<int>(),
           g.at("min_samples_leaf").get<int>()};
  const auto& l = j.at("linsvm");
  p.linsvm = {l.at("c_reg").get<double>(), l.at("max_iter").get<int>(), l.at("tol").get<double>()};
  const auto& r = j.at("rbfsvm");
  p.rbfsvm = {r.at("c_reg").get<double>(), r.at("gamma").get<double>(), r.at("tol").get<double>(),
              r.at("max_iter").get<long>()};
  return p;
}

// `jobs` is an execution setting and stays out of the echo so outputs do
// not depend on it.
inline nlohmann::json to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["mode"] = to_string(cfg.mode);
  j["model"] = ml::to_string(cfg.model);
  j["band_lo_hz"] = cfg.band.lo_hz;
  j["band_hi_hz"] = cfg.band.hi_hz;
  j["include_dc"] = cfg.band.includes_dc();
  j["k_folds"] = cfg.k_folds;
  j["n_per_class"] = cfg.n_per_class;
  j["seed"] = cfg.seed;
  j["hyperparameters"] = to_json(cfg.params);
  j["label_permutation_seed"] =
      cfg.label_permutation_seed ? nlohmann::json(*cfg.label_permutation_seed) : nlohmann::json(nullptr);
  return j;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.mode = parse_experiment_mode(j.at("mode").get<std::string>());
  cfg.model = ml::parse_model_kind(j.at("model").get<std::string>());
  cfg.band = {j.at("band_lo_hz").get<double>(), j.at("band_hi_hz").get<double>()};
  cfg.k_folds = j.at("k_folds").get<int>();
  cfg.n_per_class = j.at("n_per_class").get<std::size_t>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.params = model_params_from_json(j.at("hyperparameters"));
  if (j.contains("label_permutation_seed") && !j.at("label_permutation_seed").is_null())
    cfg.label_permutation_seed = j.at("label_permutation_seed").get<std::uint64_t>();
  return cfg;
}

struct CvReport {
  ExperimentConfig config;
  std::vector<std::string> class_names;
  std::vector<std::string> feature_names;
  std::vector<double> bin_frequencies_hz;
  std::vector<double> azimuths_deg;
  std::size_t n_samples = 0;
  std::size_t n_features = 0;
  std::vector<std::vector<std::string>> fold_groups;  // "dataset/subject" per test fold
  std::vector<std::size_t> fold_test_sizes;
  std::vector<double> fold_accuracies;
  std::vector<double> fold_train_accuracies;
  double mean_accuracy = 0.0;       // pooled: trace / total
  double mean_fold_accuracy = 0.0;  // unweighted mean over folds
  Matrix<long> confusion;           // rows = true class
  ml::ChanceInterval chance;        // 95% interval for uniform guessing
  bool converged = true;            // SVM solvers only
  std::vector<std::vector<double>> fold_importances;  // tree models
  std::vector<double> mean_importance;
  std::vector<double> frequency_importance;  // mean_importance summed over azimuths

  bool has_importance() const { return !mean_importance.empty(); }
};

// Keeps the first n entries of every set. The cut must fall between
// subjects so a subject's ears stay together.
inline std::vector<HarmonizedFeatureSet> balance_classes(const std::vector<HarmonizedFeatureSet>& sets,
                                                         std::size_t n_per_class) {
  std::vector<HarmonizedFeatureSet> out;
  out.reserve(sets.size());
  for (const auto& s : sets) {
    if (s.entries.size() < n_per_class)
      throw DataError("dataset '" + s.dataset_name + "' has " + std::to_string(s.entries.size()) +
                      " entries, fewer than n_per_class = " + std::to_string(n_per_class));
    if (n_per_class > 0 && n_per_class < s.entries.size() &&
        s.entries[n_per_class - 1].subject_id == s.entries[n_per_class].subject_id)
      throw DataError("dataset '" + s.dataset_name + "': keeping " + std::to_string(n_per_class) +
                      " entries would split subject '" + s.entries[n_per_class].subject_id + "'");
    HarmonizedFeatureSet b = s;
    b.entries.resize(n_per_class);
    out.push_back(std::move(b));
  }
  return out;
}

namespace detail {

// Whole-number label, truncated toward zero (5066.8 Hz reads "5066").
inline std::string format_feature_number(double v) {
  return std::to_string(static_cast<long long>(std::trunc(v + (v >= 0 ? 1e-9 : -1e-9))));
}

// Azimuths are labelled in (-180, 180] so the left hemisphere reads as
// positive and the right as negative.
inline std::string azimuth_label(double az) { return format_feature_number(az > 180.0 ? az - 360.0 : az); }

inline void check_same_grid(const HarmonizedFeatureSet& a, const HarmonizedFeatureSet& b) {
  if (a.azimuths_deg != b.azimuths_deg || a.bin_indices != b.bin_indices || a.source_fs_hz != b.source_fs_hz ||
      a.source_len != b.source_len || a.magnitude_scale != b.magnitude_scale)
    throw DataError("feature sets '" + a.dataset_name + "' and '" + b.dataset_name +
                    "' were harmonised on different grids");
}

}  // namespace detail

// Sets are ordered by dataset name to define class ids. Full-matrix rows
// are azimuth-major flattenings; per-position mode emits one row per
// azimuth. Group ids identify (dataset, subject).
inline ml::DesignMatrix build_design_matrix(const std::vector<HarmonizedFeatureSet>& sets, ExperimentMode mode) {
  if (sets.empty()) throw DataError("no feature sets");
  std::vector<const HarmonizedFeatureSet*> order;
  for (const auto& s : sets) order.push_back(&s);
  std::sort(order.begin(), order.end(),
            [](const auto* a, const auto* b) { return a->dataset_name < b->dataset_name; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i]->dataset_name == order[i - 1]->dataset_name)
      throw DataError("duplicate dataset name '" + order[i]->dataset_name + "'");
    detail::check_same_grid(*order[0], *order[i]);
  }
  const auto& ref = *order[0];
  const std::size_t n_az = ref.n_azimuths(), n_bins = ref.n_bins();

  ml::DesignMatrix d;
  for (const auto* s : order) d.class_names.push_back(s->dataset_name);
  if (mode == ExperimentMode::full_matrix) {
    for (std::size_t a = 0; a < n_az; ++a)
      for (std::size_t b = 0; b < n_bins; ++b)
        d.feature_names.push_back("az" + detail::azimuth_label(ref.azimuths_deg[a]) + "/f" +
                                  detail::format_feature_number(ref.bin_frequencies_hz[b]));
  } else {
    for (std::size_t b = 0; b < n_bins; ++b)
      d.feature_names.push_back("f" + detail::format_feature_number(ref.bin_frequencies_hz[b]));
  }
  d.rows = Matrix<double>(0, d.feature_names.size());

  int next_group = 0;
  for (std::size_t label = 0; label < order.size(); ++label) {
    std::map<std::string, int> group_of;
    for (const auto& e : order[label]->entries) {
      if (e.magnitudes.rows() != n_az || e.magnitudes.cols() != n_bins)
        throw DataError("entry '" + e.subject_id + "' has the wrong matrix shape");
      auto [it, inserted] = group_of.emplace(e.subject_id, next_group);
      if (inserted) ++next_group;
      if (mode == ExperimentMode::full_matrix) {
        d.rows.append_row(e.magnitudes.data());
        d.labels.push_back(static_cast<int>(label));
        d.groups.push_back(it->second);
      } else {
        for (std::size_t a = 0; a < n_az; ++a) {
          d.rows.append_row(e.magnitudes.row(a));
          d.labels.push_back(static_cast<int>(label));
          d.groups.push_back(it->second);
        }
      }
    }
  }
  return d;
}

// Group names parallel to the group ids assigned by build_design_matrix.
inline std::vector<std::string> group_names(const std::vector<HarmonizedFeatureSet>& sets) {
  std::vector<const HarmonizedFeatureSet*> order;
  for (const auto& s : sets) order.push_back(&s);
  std::sort(order.begin(), order.end(),
            [](const auto* a, const auto* b) { return a->dataset_name < b->dataset_name; });
  std::vector<std::string> names;
  for (const auto* s : order) {
    std::map<std::string, bool> seen;
    for (const auto& e : s->entries)
      if (seen.emplace(e.subject_id, true).second) names.push_back(s->dataset_name + "/" + e.subject_id);
  }
  return names;
}

// Shuffles labels across groups, keeping each group's rows on one label
// and the per-class group counts unchanged.
inline std::vector<int> permute_labels_by_group(std::span<const int> groups, std::span<const int> labels,
                                                std::uint64_t seed) {
  std::vector<int> group_ids;
  std::map<int, int> label_of;
  for (std::size_t i = 0; i < groups.size(); ++i)
    if (label_of.emplace(groups[i], labels[i]).second) group_ids.push_back(groups[i]);
  std::vector<int> pool;
  for (int g : group_ids) pool.push_back(label_of[g]);
  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  for (std::size_t i = 0; i < group_ids.size(); ++i) label_of[group_ids[i]] = pool[i];
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < groups.size(); ++i) out[i] = label_of[groups[i]];
  return out;
}

namespace detail {

struct FoldOutcome {
  std::vector<int> predictions;
  double train_accuracy = 0.0;
  bool converged = true;
  std::optional<std::vector<double>> importance;
};

inline std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(fold)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

inline FoldOutcome run_fold(const ml::DesignMatrix& d, const ml::Fold& test, const ExperimentConfig& cfg,
                            std::size_t fold_index) {
  const auto train_idx = ml::training_rows(test, d.n_samples());
  auto train = d.subset(train_idx);
  auto held_out = d.subset(test);
  const auto seed = fold_seed(cfg.seed, fold_index);
  if (!ml::is_tree_model(cfg.model)) {
    const auto scaler = ml::Standardizer::fit(train.rows);
    train.rows = scaler.apply(train.rows);
    held_out.rows = scaler.apply(held_out.rows);
  }
  ml::TrainedModel model;
  switch (cfg.model) {
    case ml::ModelKind::cart: model = ml::train_cart(train, cfg.params.cart, seed); break;
    case ml::ModelKind::gbt: model = ml::train_gbt(train, cfg.params.gbt, seed); break;
    case ml::ModelKind::linsvm: model = ml::train_linear_svm(train, cfg.params.linsvm, seed); break;
    case ml::ModelKind::rbfsvm: model = ml::train_rbf_svm(train, cfg.params.rbfsvm, seed); break;
  }
  FoldOutcome out;
  out.predictions = ml::predict(model, held_out.rows);
  out.train_accuracy = ml::accuracy(train.labels, ml::predict(model, train.rows));
  if (const auto* m = std::get_if<ml::LinearSvmModel>(&model)) out.converged = m->converged;
  if (const auto* m = std::get_if<ml::KernelSvmModel>(&model)) out.converged = m->converged;
  out.importance = ml::feature_importance(model);
  return out;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, jobs), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

// Grouped k-fold cross-validation of one model on a prepared design
// matrix. `group_labels` optionally names group ids for the report.
inline CvReport cross_validate(const ml::DesignMatrix& design, const ExperimentConfig& cfg,
                               const std::vector<std::string>& group_labels = {}) {
  cfg.check();
  ml::DesignMatrix d = design;
  if (cfg.label_permutation_seed) d.labels = permute_labels_by_group(d.groups, d.labels, *cfg.label_permutation_seed);
  ml::validate(d);
  const auto folds = ml::grouped_kfold(d.groups, d.labels, cfg.k_folds, cfg.seed);

  std::vector<detail::FoldOutcome> outcomes(folds.size());
  detail::parallel_for(folds.size(), cfg.jobs,
                       [&](std::size_t f) { outcomes[f] = detail::run_fold(d, folds[f], cfg, f); });

  CvReport rep;
  rep.config = cfg;
  rep.class_names = d.class_names;
  rep.feature_names = d.feature_names;
  rep.n_samples = d.n_samples();
  rep.n_features = d.n_features();
  const std::size_t n_classes = d.n_classes();
  rep.confusion = Matrix<long>(n_classes, n_classes, 0);
  std::vector<double> importance_sum(d.n_features(), 0.0);
  bool any_importance = false;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& test = folds[f];
    std::vector<int> truth;
    for (auto i : test) truth.push_back(d.labels[i]);
    const auto& pred = outcomes[f].predictions;
    rep.fold_test_sizes.push_back(test.size());
    rep.fold_accuracies.push_back(ml::accuracy(truth, pred));
    rep.fold_train_accuracies.push_back(outcomes[f].train_accuracy);
    const auto cm = ml::confusion_matrix(truth, pred, n_classes);
    for (std::size_t i = 0; i < cm.data().size(); ++i) rep.confusion.data()[i] += cm.data()[i];
    rep.converged = rep.converged && outcomes[f].converged;
    if (outcomes[f].importance) {
      any_importance = true;
      rep.fold_importances.push_back(*outcomes[f].importance);
      for (std::size_t j = 0; j < importance_sum.size(); ++j) importance_sum[j] += (*outcomes[f].importance)[j];
    }
    std::vector<std::string> names;
    std::vector<int> seen;
    for (auto i : test) {
      const int g = d.groups[i];
      if (std::find(seen.begin(), seen.end(), g) != seen.end()) continue;
      seen.push_back(g);
      names.push_back(static_cast<std::size_t>(g) < group_labels.size() ? group_labels[static_cast<std::size_t>(g)]
                                                                         : std::to_string(g));
    }
    rep.fold_groups.push_back(std::move(names));
  }
  long trace = 0, total = 0;
  for (std::size_t i = 0; i < n_classes; ++i)
    for (std::size_t j = 0; j < n_classes; ++j) {
      total += rep.confusion(i, j);
      if (i == j) trace += rep.confusion(i, j);
    }
  rep.mean_accuracy = static_cast<double>(trace) / static_cast<double>(total);
  rep.mean_fold_accuracy = std::accumulate(rep.fold_accuracies.begin(), rep.fold_accuracies.end(), 0.0) /
                           static_cast<double>(rep.fold_accuracies.size());
  rep.chance = ml::chance_interval(static_cast<std::size_t>(total), 1.0 / static_cast<double>(n_classes));
  if (any_importance) {
    for (auto& v : importance_sum) v /= static_cast<double>(rep.fold_importances.size());
    rep.mean_importance = std::move(importance_sum);
  }
  return rep;
}

// Balance, band selection, design matrix, grouped CV.
inline CvReport run_experiment(const std::vector<HarmonizedFeatureSet>& sets, const ExperimentConfig& cfg) {
  cfg.check();
  if (sets.size() < 2) throw DataError("need at least two datasets");
  auto balanced = balance_classes(sets, cfg.n_per_class);
  for (auto& s : balanced) s = reslice(s, cfg.band);
  const auto d = build_design_matrix(balanced, cfg.mode);
  auto rep = cross_validate(d, cfg, group_names(balanced));
  const auto& ref = *std::min_element(balanced.begin(), balanced.end(), [](const auto& a, const auto& b) {
    return a.dataset_name < b.dataset_name;
  });
  rep.bin_frequencies_hz = ref.bin_frequencies_hz;
  rep.azimuths_deg = ref.azimuths_deg;
  if (rep.has_importance()) {
    const std::size_t n_bins = ref.n_bins();
    rep.frequency_importance.assign(n_bins, 0.0);
    for (std::size_t j = 0; j < rep.mean_importance.size(); ++j)
      rep.frequency_importance[j % n_bins] += rep.mean_importance[j];
  }
  return rep;
}

// The five frequency ranges of the ablation study, widest-first order
// fixed: 1 Hz-18 kHz, 0-22.05 kHz, 1 Hz-15 kHz, 5-22.05 kHz, 5-15 kHz.
inline const std::array<Band, 5>& ablation_bands() {
  static const std::array<Band, 5> bands{{
      {1.0, 18000.0},
      {0.0, 22050.0},
      {1.0, 15000.0},
      {5000.0, 22050.0},
      {5000.0, 15000.0},
  }};
  return bands;
}

// Requires sets harmonised over the full 0 Hz-Nyquist band.
inline std::vector<CvReport> run_ablation_suite(const std::vector<HarmonizedFeatureSet>& sets,
                                                const ExperimentConfig& base) {
  std::vector<CvReport> out;
  for (const auto& band : ablation_bands()) {
    ExperimentConfig cfg = base;
    cfg.band = band;
    out.push_back(run_experiment(sets, cfg));
  }
  return out;
}

}  // namespace hrtfprint
