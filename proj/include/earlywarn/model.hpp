#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "earlywarn/frame.hpp"
#include "earlywarn/learners.hpp"

namespace ew {

using FittedLearner = std::variant<learners::ElasticNetModel, learners::ForestModel, learners::BoostModel>;

// A fitted classifier bound to its feature schema and operating threshold.
struct TrainedModel {
  FittedLearner fit;
  std::vector<std::string> features;
  double threshold = 0.5;
  double cv_auc = 0.0;
  std::uint64_t seed = 0;

  learners::LearnerKind kind() const { return static_cast<learners::LearnerKind>(fit.index()); }
  learners::HyperParams params() const;
};

TrainedModel train_model(const FeatureFrame& frame, const Eigen::Ref<const Vector>& y,
                         const learners::HyperParams& params, std::uint64_t seed,
                         const learners::FitControl& control = {});

Vector predict_proba(const TrainedModel& model, const Eigen::Ref<const Matrix>& x);
// Selects the model's columns by name; a missing column is a SchemaError.
Vector predict_proba(const TrainedModel& model, const FeatureFrame& frame);

struct RankedFeature {
  std::string feature;
  double score = 0.0;
};

// Sorted by |score| descending, then by name. Boosting needs the frame and
// labels for its permutation measure; the other learners ignore them.
std::vector<RankedFeature> ranked_importance(const TrainedModel& model, const FeatureFrame& frame,
                                             const Eigen::Ref<const Vector>& y, std::uint64_t seed);

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);

}  // namespace ew
