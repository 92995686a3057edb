#include <algorithm>
#include <numeric>
#include <random>

#include "earlywarn/errors.hpp"
#include "earlywarn/learners.hpp"

namespace ew::learners {
namespace {

struct NodeWork {
  int node;
  std::vector<int> rows;
};

class ForestTreeBuilder {
 public:
  ForestTreeBuilder(const BinnedMatrix& bins, const Eigen::Ref<const Vector>& y, const ForestParams& params,
                    Vector& importance)
      : bins_(bins), y_(y), params_(params), importance_(importance) {
    int max_bins = 1;
    for (Eigen::Index j = 0; j < bins.cols(); ++j) max_bins = std::max(max_bins, bins.n_bins(j));
    count_.assign(static_cast<std::size_t>(max_bins), 0.0);
    positive_.assign(static_cast<std::size_t>(max_bins), 0.0);
  }

  Tree build(std::mt19937_64& rng) {
    const auto n = static_cast<int>(y_.size());
    weight_.assign(static_cast<std::size_t>(n), 0.0);
    std::uniform_int_distribution<int> draw(0, n - 1);
    for (int i = 0; i < n; ++i) weight_[static_cast<std::size_t>(draw(rng))] += 1.0;
    std::vector<int> rows;
    for (int i = 0; i < n; ++i)
      if (weight_[static_cast<std::size_t>(i)] > 0) rows.push_back(i);

    Tree tree;
    tree.nodes.emplace_back();
    std::vector<NodeWork> stack;
    stack.push_back({0, std::move(rows)});
    std::vector<int> features(static_cast<std::size_t>(bins_.cols()));
    while (!stack.empty()) {
      NodeWork work = std::move(stack.back());
      stack.pop_back();
      double m = 0, pos = 0;
      for (int i : work.rows) {
        m += weight_[static_cast<std::size_t>(i)];
        pos += weight_[static_cast<std::size_t>(i)] * y_(i);
      }
      tree.nodes[static_cast<std::size_t>(work.node)].value = pos / m;
      if (m <= params_.min_node_size || pos == 0.0 || pos == m) continue;

      std::iota(features.begin(), features.end(), 0);
      for (int k = 0; k < params_.mtry; ++k) {
        std::uniform_int_distribution<int> pick(k, static_cast<int>(features.size()) - 1);
        std::swap(features[static_cast<std::size_t>(k)], features[static_cast<std::size_t>(pick(rng))]);
      }
      std::vector<int> candidates(features.begin(), features.begin() + params_.mtry);
      std::sort(candidates.begin(), candidates.end());

      const double parent = 2.0 * pos * (m - pos) / m;
      double best = 1e-12;
      int best_feature = -1, best_bin = -1;
      for (int j : candidates) {
        touched_.clear();
        for (int i : work.rows) {
          const auto b = bins_.bin(i, j);
          if (count_[b] == 0.0) touched_.push_back(b);
          count_[b] += weight_[static_cast<std::size_t>(i)];
          positive_[b] += weight_[static_cast<std::size_t>(i)] * y_(i);
        }
        std::sort(touched_.begin(), touched_.end());
        double nl = 0, pl = 0;
        for (std::size_t t = 0; t + 1 < touched_.size(); ++t) {
          nl += count_[touched_[t]];
          pl += positive_[touched_[t]];
          const double nr = m - nl, pr = pos - pl;
          const double decrease = parent - 2.0 * pl * (nl - pl) / nl - 2.0 * pr * (nr - pr) / nr;
          if (decrease > best) {
            best = decrease;
            best_feature = j;
            best_bin = touched_[t];
          }
        }
        for (auto b : touched_) count_[b] = positive_[b] = 0.0;
      }
      if (best_feature < 0) continue;

      std::vector<int> left, right;
      for (int i : work.rows) (bins_.bin(i, best_feature) <= best_bin ? left : right).push_back(i);
      const int l = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[static_cast<std::size_t>(work.node)];
      node.feature = best_feature;
      node.threshold = bins_.threshold(best_feature, best_bin);
      node.left = l;
      node.right = l + 1;
      importance_(best_feature) += best;
      // Right pushed first so the left subtree is numbered first.
      stack.push_back({l + 1, std::move(right)});
      stack.push_back({l, std::move(left)});
    }
    return tree;
  }

 private:
  const BinnedMatrix& bins_;
  Eigen::Ref<const Vector> y_;
  const ForestParams& params_;
  Vector& importance_;
  std::vector<double> weight_, count_, positive_;
  std::vector<std::uint16_t> touched_;
};

}  // namespace

ForestModel fit_probability_forest(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y,
                                   const ForestParams& params, std::uint64_t seed) {
  if (x.rows() != y.size()) throw DomainError("row count of X and y differ");
  if (x.rows() < 2) throw ParameterError("forest needs at least two rows");
  if (params.mtry < 1 || params.mtry > x.cols())
    throw ParameterError("mtry " + std::to_string(params.mtry) + " outside 1.." + std::to_string(x.cols()));
  if (params.min_node_size < 1 || params.min_node_size >= x.rows())
    throw ParameterError("min_node_size must be in [1, n)");
  if (params.n_trees < 1) throw ParameterError("forest needs at least one tree");

  ForestModel model;
  model.params = params;
  model.seed = seed;
  model.n_features = static_cast<int>(x.cols());
  model.gini_importance = Vector::Zero(x.cols());
  const BinnedMatrix bins(x);
  ForestTreeBuilder builder(bins, y, params, model.gini_importance);
  for (int t = 0; t < params.n_trees; ++t) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    model.trees.push_back(builder.build(rng));
  }
  model.gini_importance /= static_cast<double>(params.n_trees);
  return model;
}

Vector predict_proba(const ForestModel& model, const Eigen::Ref<const Matrix>& x) {
  if (model.trees.empty()) throw StateError("forest model is not fitted");
  if (x.cols() != model.n_features) throw SchemaError("column count differs from training");
  Vector p = Vector::Zero(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    double s = 0;
    for (const auto& t : model.trees) s += t.predict(row);
    p(i) = s / static_cast<double>(model.trees.size());
  }
  return p;
}

Vector importance(const ForestModel& model) {
  if (model.trees.empty()) throw StateError("forest model is not fitted");
  return model.gini_importance;
}

}  // namespace ew::learners
