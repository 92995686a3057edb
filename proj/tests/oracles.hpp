#pragma once

// Independent reference implementations used by the unit and acceptance tests.
// None of them shares code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include <boost/rational.hpp>

namespace oracle {

// Area under the empirical ROC by the trapezoid rule: walk thresholds from
// high to low, one step per distinct score.
inline double trapezoid_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double P = 0, N = 0;
  for (int l : labels) (l == 1 ? P : N) += 1;
  double tp = 0, fp = 0, prev_tpr = 0, prev_fpr = 0, area = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    const double s = scores[idx[i]];
    while (i < idx.size() && scores[idx[i]] == s) {
      (labels[idx[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    const double tpr = tp / P, fpr = fp / N;
    area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    prev_tpr = tpr;
    prev_fpr = fpr;
  }
  return area;
}

using Rational = boost::rational<std::int64_t>;

// Youden J as an exact fraction for the rule p >= t.
inline Rational youden_j(const std::vector<double>& p, const std::vector<int>& labels, double t) {
  std::int64_t tp = 0, tn = 0, P = 0, N = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (labels[i] == 1) {
      ++P;
      tp += p[i] >= t;
    } else {
      ++N;
      tn += p[i] < t;
    }
  }
  return Rational(tp, P) + Rational(tn, N) - Rational(1);
}

struct YoudenScan {
  Rational best_j;
  double smallest_argmax = 0.0;
};

// Every threshold that can change the confusion matrix: 0, 1, each observed
// score and each midpoint between neighbours.
inline YoudenScan exhaustive_youden(const std::vector<double>& p, const std::vector<int>& labels) {
  std::vector<double> cand = {0.0, 1.0};
  std::vector<double> s = p;
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  for (std::size_t k = 0; k < s.size(); ++k) {
    cand.push_back(s[k]);
    if (k + 1 < s.size()) cand.push_back(s[k] + (s[k + 1] - s[k]) / 2.0);
  }
  std::sort(cand.begin(), cand.end());
  YoudenScan out{Rational(-2), 0.0};
  for (double t : cand) {
    const Rational j = youden_j(p, labels, t);
    if (j > out.best_j) out = {j, t};
  }
  return out;
}

struct ExactMetrics {
  bool acc_defined, sens_defined, spec_defined, f1_defined, kappa_defined;
  Rational acc, sens, spec, f1, kappa;
};

// Textbook definitions evaluated in exact arithmetic.
inline ExactMetrics exact_metrics(std::int64_t tp, std::int64_t fp, std::int64_t fn, std::int64_t tn) {
  ExactMetrics m{};
  const std::int64_t n = tp + fp + fn + tn;
  m.acc_defined = n > 0;
  if (m.acc_defined) m.acc = Rational(tp + tn, n);
  m.sens_defined = tp + fn > 0;
  if (m.sens_defined) m.sens = Rational(tp, tp + fn);
  m.spec_defined = tn + fp > 0;
  if (m.spec_defined) m.spec = Rational(tn, tn + fp);
  m.f1_defined = tp + fp > 0 && tp + fn > 0;  // precision and recall both defined
  if (m.f1_defined) m.f1 = Rational(2 * tp, 2 * tp + fp + fn);
  if (n > 0) {
    const Rational po(tp + tn, n);
    const Rational pe = Rational(tp + fp, n) * Rational(tp + fn, n) + Rational(fn + tn, n) * Rational(fp + tn, n);
    m.kappa_defined = pe != Rational(1);
    if (m.kappa_defined) m.kappa = (po - pe) / (Rational(1) - pe);
  }
  return m;
}

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

// Running mean and sample variance.
class Welford {
 public:
  void push(double x) {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }
  double mean() const { return mean_; }
  double sd() const { return n_ < 2 ? 0.0 : std::sqrt(m2_ / static_cast<double>(n_ - 1)); }

 private:
  long n_ = 0;
  double mean_ = 0.0, m2_ = 0.0;
};

// Derivative-free compass search with shrinking steps over the coordinate and
// diagonal directions. Adequate for small convex problems.
inline std::vector<double> compass_minimize(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double step = 1.0, double min_step = 1e-10) {
  const std::size_t d = x.size();
  std::vector<std::vector<double>> dirs;
  for (std::size_t i = 0; i < d; ++i)
    for (double s : {1.0, -1.0}) {
      std::vector<double> v(d, 0.0);
      v[i] = s;
      dirs.push_back(v);
    }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j)
      for (double a : {1.0, -1.0})
        for (double b : {1.0, -1.0}) {
          std::vector<double> v(d, 0.0);
          v[i] = a;
          v[j] = b;
          dirs.push_back(v);
        }
  double fx = f(x);
  while (step > min_step) {
    bool moved = false;
    for (const auto& v : dirs) {
      std::vector<double> y = x;
      for (std::size_t i = 0; i < d; ++i) y[i] += step * v[i];
      const double fy = f(y);
      if (fy < fx) {
        x = std::move(y);
        fx = fy;
        moved = true;
      }
    }
    if (!moved) step /= 2.0;
  }
  return x;
}

// Penalized logistic fit on z-scored columns (population SD), solved by
// compass search. Returns probabilities on the training rows.
inline std::vector<double> elastic_net_probabilities(const std::vector<std::vector<double>>& x,
                                                     const std::vector<int>& y, double alpha, double lambda) {
  const std::size_t n = x.size(), p = x.front().size();
  std::vector<std::vector<double>> z(n, std::vector<double>(p));
  for (std::size_t j = 0; j < p; ++j) {
    double m = 0;
    for (std::size_t i = 0; i < n; ++i) m += x[i][j];
    m /= static_cast<double>(n);
    double v = 0;
    for (std::size_t i = 0; i < n; ++i) v += (x[i][j] - m) * (x[i][j] - m);
    const double sd = std::sqrt(v / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) z[i][j] = sd > 0 ? (x[i][j] - m) / sd : 0.0;
  }
  const auto objective = [&](const std::vector<double>& b) {
    double loss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double eta = b[0];
      for (std::size_t j = 0; j < p; ++j) eta += b[j + 1] * z[i][j];
      loss += std::log1p(std::exp(-std::abs(eta))) + std::max(eta, 0.0) - y[i] * eta;
    }
    double l1 = 0, l2 = 0;
    for (std::size_t j = 0; j < p; ++j) {
      l1 += std::abs(b[j + 1]);
      l2 += b[j + 1] * b[j + 1];
    }
    return loss / static_cast<double>(n) + lambda * (alpha * l1 + 0.5 * (1 - alpha) * l2);
  };
  const auto b = compass_minimize(objective, std::vector<double>(p + 1, 0.0));
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double eta = b[0];
    for (std::size_t j = 0; j < p; ++j) eta += b[j + 1] * z[i][j];
    out[i] = 1.0 / (1.0 + std::exp(-eta));
  }
  return out;
}

// Pearson correlation by the two-pass formula.
inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace oracle
