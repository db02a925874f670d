#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hrtfprint/ml/cart.hpp"
#include "hrtfprint/ml/gbt.hpp"
#include "hrtfprint/ml/linear_svm.hpp"
#include "hrtfprint/ml/rbf_svm.hpp"

namespace hrtfprint::ml {

using TrainedModel = std::variant<TreeModel, GbtModel, LinearSvmModel, KernelSvmModel>;

enum class ModelKind { cart, linsvm, rbfsvm, gbt };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::cart: return "cart";
    case ModelKind::linsvm: return "linsvm";
    case ModelKind::rbfsvm: return "rbfsvm";
    case ModelKind::gbt: return "gbt";
  }
  return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
  if (s == "cart") return ModelKind::cart;
  if (s == "linsvm") return ModelKind::linsvm;
  if (s == "rbfsvm") return ModelKind::rbfsvm;
  if (s == "gbt") return ModelKind::gbt;
  throw UsageError("unknown model '" + s + "'");
}

inline bool is_tree_model(ModelKind k) { return k == ModelKind::cart || k == ModelKind::gbt; }

inline std::size_t expected_features(const TrainedModel& m) {
  return std::visit(
      [](const auto& model) -> std::size_t {
        using T = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<T, LinearSvmModel>)
          return model.n_features();
        else if constexpr (std::is_same_v<T, KernelSvmModel>)
          return model.support_vectors.cols();
        else
          return model.n_features;
      },
      m);
}

inline std::vector<int> predict(const TrainedModel& m, const Matrix<double>& rows) {
  if (rows.rows() > 0 && rows.cols() != expected_features(m))
    throw DataError("predict: feature count " + std::to_string(rows.cols()) + " does not match model (" +
                    std::to_string(expected_features(m)) + ")");
  std::vector<int> out(rows.rows());
  std::visit(
      [&](const auto& model) {
        for (std::size_t r = 0; r < rows.rows(); ++r) out[r] = model.predict_one(rows.row(r));
      },
      m);
  return out;
}

// Normalised importances for tree models; nullopt for SVMs.
inline std::optional<std::vector<double>> feature_importance(const TrainedModel& m) {
  if (const auto* t = std::get_if<TreeModel>(&m)) return feature_importance(*t);
  if (const auto* g = std::get_if<GbtModel>(&m)) return feature_importance(*g);
  return std::nullopt;
}

}  // namespace hrtfprint::ml
