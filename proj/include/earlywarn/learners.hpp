#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "earlywarn/tree.hpp"
#include "earlywarn/types.hpp"

namespace ew::learners {

enum class LearnerKind { elastic_net, forest, boost };

// Short labels used in reports: "EN", "RF", "GBT".
std::string to_string(LearnerKind k);
std::optional<LearnerKind> learner_from_string(std::string_view s);

struct ElasticNetParams {
  double alpha = 1.0;   // 1 = lasso, 0 = ridge
  double lambda = 0.1;
};

struct ForestParams {
  int mtry = 1;
  int min_node_size = 10;
  int n_trees = 500;
};

struct BoostParams {
  int max_depth = 6;
  double min_child_weight = 1.0;
  double subsample = 1.0;
  double colsample = 1.0;
  double learning_rate = 0.1;
  int n_rounds = 200;
  double reg_lambda = 1.0;
};

using HyperParams = std::variant<ElasticNetParams, ForestParams, BoostParams>;

LearnerKind kind_of(const HyperParams& params);
std::string describe(const HyperParams& params);

// ---------------------------------------------------------------------------
// Elastic-net logistic regression
//
// Minimizes  -(1/n) loglik(b0, beta) + lambda * (alpha |beta|_1 + (1 - alpha) |beta|^2 / 2)
// over z-scored columns. Each sweep solves the penalized quadratic model of
// the loss by cyclic coordinate descent and backtracks on the true
// objective, so the objective never increases from one sweep to the next.
// ---------------------------------------------------------------------------

struct FitControl {
  double tolerance = 1e-7;
  int max_sweeps = 100000;
  bool record_objective = false;
};

struct ElasticNetModel {
  bool fitted = false;
  ElasticNetParams params;
  double intercept = 0.0;
  Vector coefficients;  // on the standardized scale
  Vector feature_means;
  Vector feature_scales;  // 0 marks a constant training column
  int sweeps = 0;
  std::vector<double> objective_trace;  // per full sweep, when recorded

  double linear_score(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

ElasticNetModel fit_elastic_net(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y,
                                const ElasticNetParams& params, const FitControl& control = {});

// Warm-started fits along a decreasing lambda sequence (input is sorted internally;
// the result follows the caller's order).
std::vector<ElasticNetModel> fit_elastic_net_path(const Eigen::Ref<const Matrix>& x,
                                                  const Eigen::Ref<const Vector>& y, double alpha,
                                                  const std::vector<double>& lambdas,
                                                  const FitControl& control = {});

// Penalized objective of a model on the given (raw-scale) data.
double elastic_net_objective(const ElasticNetModel& model, const Eigen::Ref<const Matrix>& x,
                             const Eigen::Ref<const Vector>& y);

Vector predict_proba(const ElasticNetModel& model, const Eigen::Ref<const Matrix>& x);

// ---------------------------------------------------------------------------
// Probability forest: bootstrap samples, mtry candidate columns per split,
// Gini criterion, leaves store the positive-class proportion.
// ---------------------------------------------------------------------------

struct ForestModel {
  ForestParams params;
  std::uint64_t seed = 0;
  int n_features = 0;
  std::vector<Tree> trees;
  Vector gini_importance;  // mean total impurity decrease per tree
};

ForestModel fit_probability_forest(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y,
                                   const ForestParams& params, std::uint64_t seed);
Vector predict_proba(const ForestModel& model, const Eigen::Ref<const Matrix>& x);

// ---------------------------------------------------------------------------
// Second-order gradient boosting on the logistic loss.
// ---------------------------------------------------------------------------

struct BoostModel {
  BoostParams params;
  std::uint64_t seed = 0;
  int n_features = 0;
  bool fitted = false;
  double base_margin = 0.0;  // logit of the training base rate
  std::vector<Tree> trees;
};

// Gradient and hessian of log(1 + e^m) - y m with respect to the margin m.
std::pair<double, double> logistic_grad_hess(double margin, double label);

BoostModel fit_gbt(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y,
                   const BoostParams& params, std::uint64_t seed);
// Uses the first `rounds` trees (all when negative).
Vector predict_margin(const BoostModel& model, const Eigen::Ref<const Matrix>& x, int rounds = -1);
Vector predict_proba(const BoostModel& model, const Eigen::Ref<const Matrix>& x, int rounds = -1);
// Column r holds probabilities after checkpoints[r] rounds.
Matrix staged_proba(const BoostModel& model, const Eigen::Ref<const Matrix>& x,
                    const std::vector<int>& checkpoints);

// ---------------------------------------------------------------------------
// Feature importance
// ---------------------------------------------------------------------------

// Standardized coefficients, sign retained.
Vector importance(const ElasticNetModel& model);
// Mean total Gini decrease.
Vector importance(const ForestModel& model);
// Mean drop in AUC over `repeats` column permutations on (x, y).
Vector permutation_importance(const BoostModel& model, const Eigen::Ref<const Matrix>& x,
                              const Eigen::Ref<const Vector>& y, std::uint64_t seed, int repeats = 10);

inline double sigmoid(double m) {
  return m >= 0 ? 1.0 / (1.0 + std::exp(-m)) : std::exp(m) / (1.0 + std::exp(m));
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// log(1 + e^m) without overflow.
inline double softplus(double m) { return m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m)); }

}  // namespace ew::learners
