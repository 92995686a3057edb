#include "earlywarn/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "earlywarn/errors.hpp"
#include "earlywarn/learners.hpp"

namespace ew::calibrate {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& labels) {
  if (p.size() != labels.size()) throw DomainError("probabilities and labels differ in length");
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels(i) < 0.0 || labels(i) > 1.0) throw DomainError("targets must lie in [0, 1]");
}

double clip(double p) { return std::clamp(p, kClip, 1.0 - kClip); }

// Negative log-likelihood of targets t under p = sigmoid(-(A s + B)).
double platt_nll(const Vector& s, const Vector& t, double a, double b) {
  double f = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double m = a * s(i) + b;  // log-odds of the negative class
    f += t(i) * learners::softplus(m) + (1.0 - t(i)) * learners::softplus(-m);
  }
  return f;
}

}  // namespace

double clipped_logit(double p) { return learners::logit(clip(p)); }

PlattParams fit_platt(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& labels, int max_iterations,
                      double tolerance) {
  check(p, labels);
  const Eigen::Index n = p.size();
  double n_pos = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels(i) != 0.0 && labels(i) != 1.0) throw DomainError("labels must be 0 or 1");
    n_pos += labels(i);
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DomainError("Platt scaling needs both classes");
  const double hi = (n_pos + 1.0) / (n_pos + 2.0), lo = 1.0 / (n_neg + 2.0);
  Vector s(n), t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s(i) = clipped_logit(p(i));
    t(i) = labels(i) == 1.0 ? hi : lo;
  }

  // Start from the identity map; Newton with backtracking on the convex NLL.
  PlattParams out;
  double a = -1.0, b = 0.0;
  double f = platt_nll(s, t, a, b);
  for (int it = 1; it <= max_iterations; ++it) {
    double g1 = 0, g2 = 0, h11 = 0, h22 = 0, h21 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double q = learners::sigmoid(a * s(i) + b);  // probability of the negative class
      const double d = q - (1.0 - t(i));
      const double w = q * (1.0 - q);
      g1 += d * s(i);
      g2 += d;
      h11 += w * s(i) * s(i);
      h22 += w;
      h21 += w * s(i);
    }
    h11 += 1e-12;
    h22 += 1e-12;
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    double step = 1.0, fn = f;
    while (step >= 1e-10) {
      fn = platt_nll(s, t, a + step * da, b + step * db);
      if (fn < f + 1e-4 * step * (g1 * da + g2 * db)) break;
      step /= 2.0;
    }
    if (step < 1e-10) {
      // No descent possible along the Newton direction: at the optimum to machine precision.
      out.A = a;
      out.B = b;
      out.iterations = it;
      return out;
    }
    a += step * da;
    b += step * db;
    f = fn;
    if (std::abs(step * da) < tolerance && std::abs(step * db) < tolerance) {
      out.A = a;
      out.B = b;
      out.iterations = it;
      return out;
    }
  }
  throw FitError(fmt::format("Platt scaling did not converge in {} iterations (A={}, B={})", max_iterations, a, b));
}

Vector apply_platt(const PlattParams& params, const Eigen::Ref<const Vector>& p) {
  Vector out(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) out(i) = learners::sigmoid(-(params.A * clipped_logit(p(i)) + params.B));
  return out;
}

double log_loss(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& targets) {
  check(p, targets);
  if (p.size() == 0) throw DomainError("no probabilities");
  double f = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double q = clip(p(i));
    f -= targets(i) * std::log(q) + (1.0 - targets(i)) * std::log1p(-q);
  }
  return f / static_cast<double>(p.size());
}

double brier_score(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& labels) {
  check(p, labels);
  if (p.size() == 0) throw DomainError("no probabilities");
  return (p - labels).squaredNorm() / static_cast<double>(p.size());
}

std::pair<double, double> logistic_recalibration(const Eigen::Ref<const Vector>& score,
                                                 const Eigen::Ref<const Vector>& labels) {
  const Eigen::Index n = score.size();
  const double mean = score.mean();
  const double spread = (score.array() - mean).square().sum();
  const double ybar = labels.mean();
  if (n < 2 || !(spread > 1e-12 * static_cast<double>(n)) || ybar == 0.0 || ybar == 1.0) return {kNaN, kNaN};

  // Newton on the unpenalized log-likelihood, centered score for conditioning.
  double slope = 0.0, icpt = learners::logit(ybar);
  const auto nll = [&](double b1, double b0) {
    double f = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = b0 + b1 * (score(i) - mean);
      f += learners::softplus(m) - labels(i) * m;
    }
    return f;
  };
  double f = nll(slope, icpt);
  bool converged = false;
  for (int it = 0; it < 200 && !converged; ++it) {
    double g1 = 0, g0 = 0, h11 = 0, h00 = 0, h10 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = score(i) - mean;
      const double q = learners::sigmoid(icpt + slope * x);
      const double d = q - labels(i), w = q * (1.0 - q);
      g1 += d * x;
      g0 += d;
      h11 += w * x * x;
      h00 += w;
      h10 += w * x;
    }
    const double det = h11 * h00 - h10 * h10;
    if (!(det > 0)) break;
    const double d1 = -(h00 * g1 - h10 * g0) / det;
    const double d0 = -(-h10 * g1 + h11 * g0) / det;
    double step = 1.0, fn = f;
    while (step >= 1e-10) {
      fn = nll(slope + step * d1, icpt + step * d0);
      if (fn <= f) break;
      step /= 2.0;
    }
    if (step < 1e-10) break;
    slope += step * d1;
    icpt += step * d0;
    f = fn;
    converged = std::abs(step * d1) < 1e-10 && std::abs(step * d0) < 1e-10;
    if (std::abs(slope) > 1e6) break;
  }
  // Separated data drive the slope to infinity; Newton stalls before converging.
  if (!converged) return {kNaN, kNaN};
  return {slope, icpt - slope * mean};
}

CalibrationCurve calibration_curve(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& labels,
                                   int n_bins) {
  check(p, labels);
  if (n_bins < 1) throw ParameterError("n_bins must be >= 1");
  const auto n = static_cast<std::size_t>(p.size());
  if (n < static_cast<std::size_t>(n_bins)) throw ParameterError("fewer probabilities than bins");
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return p(a) < p(b); });
  CalibrationCurve curve;
  const auto bins = static_cast<std::size_t>(n_bins);
  std::size_t start = 0;
  for (std::size_t b = 0; b < bins; ++b) {
    // The first n % bins bins receive one extra row.
    const std::size_t size = n / bins + (b < n % bins ? 1 : 0);
    CurveBin bin;
    bin.count = static_cast<int>(size);
    for (std::size_t r = start; r < start + size; ++r) {
      bin.mean_predicted += p(order[r]);
      bin.observed += labels(order[r]);
    }
    bin.mean_predicted /= static_cast<double>(size);
    bin.observed /= static_cast<double>(size);
    curve.bins.push_back(bin);
    start += size;
  }
  Vector s(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) s(i) = clipped_logit(p(i));
  std::tie(curve.slope, curve.intercept) = logistic_recalibration(s, labels);
  curve.brier = brier_score(p, labels);
  curve.log_loss = log_loss(p, labels);
  return curve;
}

}  // namespace ew::calibrate
