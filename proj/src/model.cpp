#include "earlywarn/model.hpp"

#include <algorithm>
#include <cmath>

#include "earlywarn/errors.hpp"
#include "earlywarn/hypergrid.hpp"

namespace ew {
namespace {

using nlohmann::json;
using namespace learners;

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Trees as parallel arrays: feature, threshold, left, right, value.
json tree_to_json(const Tree& t) {
  json f = json::array(), th = json::array(), l = json::array(), r = json::array(), v = json::array();
  for (const auto& n : t.nodes) {
    f.push_back(n.feature);
    th.push_back(n.threshold);
    l.push_back(n.left);
    r.push_back(n.right);
    v.push_back(n.value);
  }
  return {{"feature", f}, {"threshold", th}, {"left", l}, {"right", r}, {"value", v}};
}

Tree tree_from_json(const json& j) {
  Tree t;
  const auto f = j.at("feature").get<std::vector<int>>();
  const auto th = j.at("threshold").get<std::vector<double>>();
  const auto l = j.at("left").get<std::vector<int>>();
  const auto r = j.at("right").get<std::vector<int>>();
  const auto v = j.at("value").get<std::vector<double>>();
  if (th.size() != f.size() || l.size() != f.size() || r.size() != f.size() || v.size() != f.size())
    throw SchemaError("tree arrays differ in length");
  const int n = static_cast<int>(f.size());
  for (int k = 0; k < n; ++k) {
    const auto s = static_cast<std::size_t>(k);
    if (f[s] >= 0 && (l[s] <= k || r[s] <= k || l[s] >= n || r[s] >= n))
      throw SchemaError("tree child index out of range");
    t.nodes.push_back({f[s], th[s], l[s], r[s], v[s]});
  }
  return t;
}

}  // namespace

HyperParams TrainedModel::params() const {
  return std::visit([](const auto& m) -> HyperParams { return m.params; }, fit);
}

TrainedModel train_model(const FeatureFrame& frame, const Eigen::Ref<const Vector>& y, const HyperParams& params,
                         std::uint64_t seed, const FitControl& control) {
  TrainedModel model;
  model.features = frame.columns;
  model.seed = seed;
  switch (kind_of(params)) {
    case LearnerKind::elastic_net:
      model.fit = fit_elastic_net(frame.values, y, std::get<ElasticNetParams>(params), control);
      break;
    case LearnerKind::forest:
      model.fit = fit_probability_forest(frame.values, y, std::get<ForestParams>(params), seed);
      break;
    case LearnerKind::boost:
      model.fit = fit_gbt(frame.values, y, std::get<BoostParams>(params), seed);
      break;
  }
  return model;
}

Vector predict_proba(const TrainedModel& model, const Eigen::Ref<const Matrix>& x) {
  return std::visit([&](const auto& m) -> Vector { return learners::predict_proba(m, x); }, model.fit);
}

Vector predict_proba(const TrainedModel& model, const FeatureFrame& frame) {
  return predict_proba(model, frame.select(model.features).values);
}

std::vector<RankedFeature> ranked_importance(const TrainedModel& model, const FeatureFrame& frame,
                                             const Eigen::Ref<const Vector>& y, std::uint64_t seed) {
  Vector scores;
  switch (model.kind()) {
    case LearnerKind::elastic_net: scores = importance(std::get<ElasticNetModel>(model.fit)); break;
    case LearnerKind::forest: scores = importance(std::get<ForestModel>(model.fit)); break;
    case LearnerKind::boost:
      scores = permutation_importance(std::get<BoostModel>(model.fit), frame.select(model.features).values, y, seed);
      break;
  }
  std::vector<RankedFeature> out;
  for (std::size_t j = 0; j < model.features.size(); ++j)
    out.push_back({model.features[j], scores(static_cast<Eigen::Index>(j))});
  std::stable_sort(out.begin(), out.end(), [](const RankedFeature& a, const RankedFeature& b) {
    const double fa = std::abs(a.score), fb = std::abs(b.score);
    return fa != fb ? fa > fb : a.feature < b.feature;
  });
  return out;
}

json model_to_json(const TrainedModel& model) {
  json j;
  j["kind"] = to_string(model.kind());
  j["params"] = params_to_json(model.params());
  j["features"] = model.features;
  j["threshold"] = model.threshold;
  j["cv_auc"] = model.cv_auc;
  j["seed"] = model.seed;
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, ElasticNetModel>) {
          j["intercept"] = m.intercept;
          j["coefficients"] = vector_to_json(m.coefficients);
          j["feature_means"] = vector_to_json(m.feature_means);
          j["feature_scales"] = vector_to_json(m.feature_scales);
          j["sweeps"] = m.sweeps;
        } else if constexpr (std::is_same_v<M, ForestModel>) {
          j["gini_importance"] = vector_to_json(m.gini_importance);
          j["trees"] = json::array();
          for (const auto& t : m.trees) j["trees"].push_back(tree_to_json(t));
        } else {
          j["base_margin"] = m.base_margin;
          j["trees"] = json::array();
          for (const auto& t : m.trees) j["trees"].push_back(tree_to_json(t));
        }
      },
      model.fit);
  return j;
}

TrainedModel model_from_json(const json& j) {
  try {
    TrainedModel model;
    model.features = j.at("features").get<std::vector<std::string>>();
    model.threshold = j.at("threshold").get<double>();
    model.cv_auc = j.at("cv_auc").get<double>();
    model.seed = j.at("seed").get<std::uint64_t>();
    const auto params = params_from_json(j.at("params"));
    const auto p = static_cast<Eigen::Index>(model.features.size());
    switch (kind_of(params)) {
      case LearnerKind::elastic_net: {
        ElasticNetModel m;
        m.fitted = true;
        m.params = std::get<ElasticNetParams>(params);
        m.intercept = j.at("intercept").get<double>();
        m.coefficients = vector_from_json(j.at("coefficients"));
        m.feature_means = vector_from_json(j.at("feature_means"));
        m.feature_scales = vector_from_json(j.at("feature_scales"));
        m.sweeps = j.at("sweeps").get<int>();
        if (m.coefficients.size() != p || m.feature_means.size() != p || m.feature_scales.size() != p)
          throw SchemaError("coefficient count differs from the feature list");
        model.fit = std::move(m);
        break;
      }
      case LearnerKind::forest: {
        ForestModel m;
        m.params = std::get<ForestParams>(params);
        m.seed = model.seed;
        m.n_features = static_cast<int>(p);
        m.gini_importance = vector_from_json(j.at("gini_importance"));
        for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
        model.fit = std::move(m);
        break;
      }
      case LearnerKind::boost: {
        BoostModel m;
        m.params = std::get<BoostParams>(params);
        m.seed = model.seed;
        m.n_features = static_cast<int>(p);
        m.fitted = true;
        m.base_margin = j.at("base_margin").get<double>();
        for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
        model.fit = std::move(m);
        break;
      }
    }
    return model;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("bad model file: ") + e.what());
  }
}

}  // namespace ew
