#pragma once

#include <string>
#include <vector>

#include "earlywarn/types.hpp"

namespace ew::calibrate {

inline constexpr double kClip = 1e-6;

// p' = 1 / (1 + exp(A s + B)) with s = logit(clip(p)).
struct PlattParams {
  double A = -1.0;
  double B = 0.0;
  int iterations = 0;
};

double clipped_logit(double p);

// Maximum likelihood with smoothed targets (N+ + 1)/(N+ + 2) and 1/(N- + 2),
// Newton iterations to 1e-10. Throws DomainError on a single class and
// FitError (with the last iterate) when it does not converge.
PlattParams fit_platt(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& labels,
                      int max_iterations = 200, double tolerance = 1e-10);
Vector apply_platt(const PlattParams& params, const Eigen::Ref<const Vector>& p);

struct CurveBin {
  double mean_predicted = 0.0;
  double observed = 0.0;
  int count = 0;
};

struct CalibrationCurve {
  std::vector<CurveBin> bins;
  double slope = 0.0;      // NaN when undefined
  double intercept = 0.0;  // NaN when undefined
  double brier = 0.0;
  double log_loss = 0.0;
};

// Equal-count bins over the sorted probabilities; slope and intercept from an
// unpenalized logistic fit of the labels on logit(p).
CalibrationCurve calibration_curve(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& labels,
                                   int n_bins = 10);

// Cross-entropy against hard labels or arbitrary targets in [0, 1], with clipping.
double log_loss(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& targets);
double brier_score(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& labels);

// Logistic regression of labels on a single score: returns (slope, intercept),
// NaN for both when the score has no spread or the fit diverges.
std::pair<double, double> logistic_recalibration(const Eigen::Ref<const Vector>& score,
                                                 const Eigen::Ref<const Vector>& labels);

}  // namespace ew::calibrate
