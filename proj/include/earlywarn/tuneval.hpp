#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "earlywarn/learners.hpp"
#include "earlywarn/types.hpp"

namespace ew::tuneval {

// Rank-based AUC with 0.5 credit for tied positive/negative pairs.
double auc_rank(const std::vector<double>& scores_pos, const std::vector<double>& scores_neg);
// Same, with labels in {0, 1} (1 = positive).
double auc_rank(const Eigen::Ref<const Vector>& scores, const Eigen::Ref<const Vector>& labels);

struct FoldPlan {
  int k = 10;
  std::uint64_t seed = 0;
  std::vector<int> fold;  // fold index per row

  std::vector<int> test_rows(int f) const;
  std::vector<int> train_rows(int f) const;
};

// Shuffles each class under the seed and deals rows round-robin over the folds.
FoldPlan stratified_kfold(const Eigen::Ref<const Vector>& labels, int k, std::uint64_t seed);

enum class ThresholdPolicy { youden_source, prevalence_target };
std::string to_string(ThresholdPolicy p);
std::optional<ThresholdPolicy> policy_from_string(std::string_view s);

struct Threshold {
  double value = 0.5;  // probability >= value is flagged at risk
  ThresholdPolicy policy = ThresholdPolicy::youden_source;
};

// Maximizes sensitivity + specificity - 1 over {0, 1} and midpoints between
// adjacent distinct scores; ties go to the smallest threshold.
Threshold youden_threshold(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& labels);
double youden_j(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& labels, double threshold);

// Flags the achievable count closest to target * n (ties: larger count).
Threshold prevalence_threshold(const Eigen::Ref<const Vector>& p, double target_prevalence);

struct ConfusionMatrix {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::int64_t n() const { return tp + fp + fn + tn; }
};

ConfusionMatrix confusion(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& labels,
                          double threshold);

// Undefined ratios are NaN.
struct Metrics {
  double accuracy = 0, sensitivity = 0, specificity = 0, f1 = 0, kappa = 0;
};

Metrics metrics_from_confusion(const ConfusionMatrix& cm);

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

struct GridEntry {
  learners::HyperParams params;
  double cv_auc = 0.0;
};

struct SearchResult {
  learners::HyperParams best;
  double best_auc = 0.0;
  std::vector<GridEntry> table;
  Vector oof;  // out-of-fold probabilities of the best configuration (NaN for skipped rows)
  std::vector<int> skipped_folds;
};

struct SearchOptions {
  std::uint64_t seed = 0;
  int jobs = 1;
  learners::FitControl control{};
  std::vector<int> boost_checkpoints = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100,
                                        110, 120, 130, 140, 150, 160, 170, 180, 190, 200};
};

// Mean per-fold AUC per configuration. Ties within 1e-12 go to the more
// regularized configuration. Boosting configurations are also searched over
// the round checkpoints up to their n_rounds.
SearchResult grid_search_cv(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y,
                            const std::vector<learners::HyperParams>& grid, const FoldPlan& plan,
                            const SearchOptions& options = {});

// True when a is strictly more regularized than b (same learner kind).
bool more_regularized(const learners::HyperParams& a, const learners::HyperParams& b);

}  // namespace ew::tuneval
