#include "earlywarn/tuneval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "earlywarn/errors.hpp"

namespace ew::tuneval {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_binary(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& labels) {
  if (p.size() != labels.size()) throw DomainError("scores and labels differ in length");
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels(i) != 0.0 && labels(i) != 1.0) throw DomainError("labels must be 0 or 1");
}

// Sorted distinct values with the positive and negative count at each value.
struct ValueCounts {
  std::vector<double> value;
  std::vector<std::int64_t> pos, neg;
};

ValueCounts count_by_value(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& labels) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return p(a) < p(b); });
  ValueCounts vc;
  for (auto i : order) {
    if (vc.value.empty() || p(i) != vc.value.back()) {
      vc.value.push_back(p(i));
      vc.pos.push_back(0);
      vc.neg.push_back(0);
    }
    (labels(i) == 1.0 ? vc.pos : vc.neg).back() += 1;
  }
  return vc;
}

}  // namespace

double auc_rank(const std::vector<double>& scores_pos, const std::vector<double>& scores_neg) {
  if (scores_pos.empty() || scores_neg.empty()) throw DomainError("AUC needs both classes");
  Vector s(static_cast<Eigen::Index>(scores_pos.size() + scores_neg.size()));
  Vector l = Vector::Zero(s.size());
  for (std::size_t i = 0; i < scores_pos.size(); ++i) {
    s(static_cast<Eigen::Index>(i)) = scores_pos[i];
    l(static_cast<Eigen::Index>(i)) = 1.0;
  }
  for (std::size_t i = 0; i < scores_neg.size(); ++i)
    s(static_cast<Eigen::Index>(scores_pos.size() + i)) = scores_neg[i];
  return auc_rank(s, l);
}

double auc_rank(const Eigen::Ref<const Vector>& scores, const Eigen::Ref<const Vector>& labels) {
  check_binary(scores, labels);
  const auto vc = count_by_value(scores, labels);
  // Sum of positive midranks.
  double rank_sum = 0, below = 0;
  std::int64_t n_pos = 0, n_neg = 0;
  for (std::size_t v = 0; v < vc.value.size(); ++v) {
    const double tied = static_cast<double>(vc.pos[v] + vc.neg[v]);
    rank_sum += static_cast<double>(vc.pos[v]) * (below + (tied + 1.0) / 2.0);
    below += tied;
    n_pos += vc.pos[v];
    n_neg += vc.neg[v];
  }
  if (n_pos == 0 || n_neg == 0) throw DomainError("AUC needs both classes");
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::vector<int> FoldPlan::test_rows(int f) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < fold.size(); ++i)
    if (fold[i] == f) out.push_back(static_cast<int>(i));
  return out;
}

std::vector<int> FoldPlan::train_rows(int f) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < fold.size(); ++i)
    if (fold[i] != f) out.push_back(static_cast<int>(i));
  return out;
}

FoldPlan stratified_kfold(const Eigen::Ref<const Vector>& labels, int k, std::uint64_t seed) {
  std::vector<int> pos, neg;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels(i) == 1.0)
      pos.push_back(static_cast<int>(i));
    else if (labels(i) == 0.0)
      neg.push_back(static_cast<int>(i));
    else
      throw DomainError("labels must be 0 or 1");
  }
  if (k < 2) throw ParameterError("k must be >= 2");
  const auto smaller = static_cast<int>(std::min(pos.size(), neg.size()));
  if (k > smaller)
    throw ParameterError("k = " + std::to_string(k) + " exceeds the smaller class count " + std::to_string(smaller));
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.fold.assign(static_cast<std::size_t>(labels.size()), -1);
  std::mt19937_64 rng(derive_seed(seed, 0x6b666f6c64ULL));
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  for (std::size_t r = 0; r < pos.size(); ++r) plan.fold[static_cast<std::size_t>(pos[r])] = static_cast<int>(r % k);
  // Negatives continue where positives stopped so fold sizes stay balanced too.
  const std::size_t offset = pos.size() % static_cast<std::size_t>(k);
  for (std::size_t r = 0; r < neg.size(); ++r)
    plan.fold[static_cast<std::size_t>(neg[r])] = static_cast<int>((offset + r) % static_cast<std::size_t>(k));
  return plan;
}

std::string to_string(ThresholdPolicy p) {
  return p == ThresholdPolicy::youden_source ? "youden_source" : "prevalence_target";
}

std::optional<ThresholdPolicy> policy_from_string(std::string_view s) {
  if (s == "youden_source") return ThresholdPolicy::youden_source;
  if (s == "prevalence_target") return ThresholdPolicy::prevalence_target;
  return std::nullopt;
}

Threshold youden_threshold(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& labels) {
  check_binary(p, labels);
  const auto vc = count_by_value(p, labels);
  const std::int64_t n_pos = std::accumulate(vc.pos.begin(), vc.pos.end(), std::int64_t{0});
  const std::int64_t n_neg = std::accumulate(vc.neg.begin(), vc.neg.end(), std::int64_t{0});
  if (n_pos == 0 || n_neg == 0) throw DomainError("Youden threshold needs both classes");

  // J * n_pos * n_neg, compared exactly in integers.
  const auto score = [&](std::int64_t tp, std::int64_t tn) { return tp * n_neg + tn * n_pos - n_pos * n_neg; };
  // Threshold 0 flags everything.
  double best_t = 0.0;
  std::int64_t best = score(n_pos, 0);
  if (vc.value.front() < 0.0) best = std::numeric_limits<std::int64_t>::min();
  std::int64_t tn = 0, fn = 0;
  for (std::size_t v = 0; v < vc.value.size(); ++v) {
    tn += vc.neg[v];
    fn += vc.pos[v];
    double t;
    if (v + 1 < vc.value.size())
      t = vc.value[v] + (vc.value[v + 1] - vc.value[v]) / 2.0;
    else if (vc.value[v] < 1.0)
      t = 1.0;
    else
      break;
    const auto s = score(n_pos - fn, tn);
    if (s > best) {
      best = s;
      best_t = t;
    }
  }
  // Threshold 1 when the largest score reaches it.
  if (vc.value.back() >= 1.0) {
    std::int64_t tn1 = 0, fn1 = 0;
    for (std::size_t v = 0; v < vc.value.size(); ++v)
      if (vc.value[v] < 1.0) {
        tn1 += vc.neg[v];
        fn1 += vc.pos[v];
      }
    const auto s = score(n_pos - fn1, tn1);
    if (s > best) best_t = 1.0;
  }
  return {best_t, ThresholdPolicy::youden_source};
}

double youden_j(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& labels, double threshold) {
  const auto cm = confusion(p, labels, threshold);
  return static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn) +
         static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp) - 1.0;
}

Threshold prevalence_threshold(const Eigen::Ref<const Vector>& p, double target_prevalence) {
  if (!(target_prevalence > 0.0 && target_prevalence < 1.0))
    throw ParameterError("target prevalence must be in (0, 1)");
  if (p.size() == 0) throw DomainError("no probabilities");
  std::vector<double> v(p.data(), p.data() + p.size());
  std::sort(v.begin(), v.end(), std::greater<>());
  const double target = target_prevalence * static_cast<double>(v.size());

  // Achievable flagged counts: 0 and the position after each run of ties.
  std::size_t best_count = 0;
  double best_gap = target;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    const std::size_t count = i + 1;
    const double gap = std::abs(static_cast<double>(count) - target);
    if (gap <= best_gap) {
      best_gap = gap;
      best_count = count;
    }
  }
  double t;
  if (best_count == 0)
    t = v.front() < 1.0 ? v.front() + (1.0 - v.front()) / 2.0 : std::nextafter(v.front(), 2.0);
  else if (best_count == v.size())
    t = std::min(0.0, v.back());
  else
    t = v[best_count] + (v[best_count - 1] - v[best_count]) / 2.0;
  if (best_count > 0 && best_count < v.size() && !(t > v[best_count])) t = v[best_count - 1];
  return {t, ThresholdPolicy::prevalence_target};
}

ConfusionMatrix confusion(const Eigen::Ref<const Vector>& p, const Eigen::Ref<const Vector>& labels,
                          double threshold) {
  check_binary(p, labels);
  ConfusionMatrix cm;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const bool flagged = p(i) >= threshold;
    if (labels(i) == 1.0)
      (flagged ? cm.tp : cm.fn) += 1;
    else
      (flagged ? cm.fp : cm.tn) += 1;
  }
  return cm;
}

Metrics metrics_from_confusion(const ConfusionMatrix& cm) {
  if (cm.tp < 0 || cm.fp < 0 || cm.fn < 0 || cm.tn < 0) throw DomainError("negative confusion count");
  const std::int64_t n = cm.n();
  if (n == 0) throw DomainError("empty confusion matrix");
  const auto ratio = [](std::int64_t a, std::int64_t b) {
    return b == 0 ? kNaN : static_cast<double>(a) / static_cast<double>(b);
  };
  Metrics m;
  m.accuracy = ratio(cm.tp + cm.tn, n);
  m.sensitivity = ratio(cm.tp, cm.tp + cm.fn);
  m.specificity = ratio(cm.tn, cm.tn + cm.fp);
  m.f1 = (cm.tp + cm.fp == 0 || cm.tp + cm.fn == 0) ? kNaN : ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn);
  // (p_o - p_e) / (1 - p_e) scaled by n^2 to stay in integers.
  const std::int64_t chance = (cm.tp + cm.fp) * (cm.tp + cm.fn) + (cm.fn + cm.tn) * (cm.fp + cm.tn);
  m.kappa = ratio(n * (cm.tp + cm.tn) - chance, n * n - chance);
  return m;
}

}  // namespace ew::tuneval
