#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "earlywarn/errors.hpp"
#include "earlywarn/learners.hpp"
#include "earlywarn/tuneval.hpp"

namespace ew::learners {
namespace {

void check_params(const BoostParams& p) {
  if (p.max_depth < 1) throw ParameterError("max_depth must be >= 1");
  if (!(p.min_child_weight >= 0)) throw ParameterError("min_child_weight must be >= 0");
  if (!(p.subsample > 0 && p.subsample <= 1)) throw ParameterError("subsample must be in (0, 1]");
  if (!(p.colsample > 0 && p.colsample <= 1)) throw ParameterError("colsample must be in (0, 1]");
  if (!(p.learning_rate >= 0)) throw ParameterError("learning_rate must be >= 0");
  if (p.n_rounds < 0) throw ParameterError("n_rounds must be >= 0");
  if (!(p.reg_lambda >= 0)) throw ParameterError("reg_lambda must be >= 0");
}

// Draws `count` distinct indices from 0..n-1, returned sorted.
std::vector<int> sample_without_replacement(int n, int count, std::mt19937_64& rng) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (int k = 0; k < count; ++k) {
    std::uniform_int_distribution<int> pick(k, n - 1);
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

class BoostTreeBuilder {
 public:
  BoostTreeBuilder(const BinnedMatrix& bins, const BoostParams& params) : bins_(bins), params_(params) {
    int max_bins = 1;
    for (Eigen::Index j = 0; j < bins.cols(); ++j) max_bins = std::max(max_bins, bins.n_bins(j));
    g_hist_.assign(static_cast<std::size_t>(max_bins), 0.0);
    h_hist_.assign(static_cast<std::size_t>(max_bins), 0.0);
    seen_.assign(static_cast<std::size_t>(max_bins), 0);
  }

  Tree build(const std::vector<int>& rows, const std::vector<int>& features, const std::vector<double>& g,
             const std::vector<double>& h) {
    Tree tree;
    tree.nodes.emplace_back();
    struct Work {
      int node, depth;
      std::vector<int> rows;
    };
    std::vector<Work> stack;
    stack.push_back({0, 0, rows});
    const double lambda = params_.reg_lambda;
    while (!stack.empty()) {
      Work work = std::move(stack.back());
      stack.pop_back();
      double gs = 0, hs = 0;
      for (int i : work.rows) {
        gs += g[static_cast<std::size_t>(i)];
        hs += h[static_cast<std::size_t>(i)];
      }
      tree.nodes[static_cast<std::size_t>(work.node)].value = -gs / (hs + lambda) * params_.learning_rate;
      if (work.depth >= params_.max_depth || work.rows.size() < 2) continue;

      const double parent = gs * gs / (hs + lambda);
      double best = 1e-12;
      int best_feature = -1, best_bin = -1;
      for (int j : features) {
        touched_.clear();
        for (int i : work.rows) {
          const auto b = bins_.bin(i, j);
          if (!seen_[b]) {
            seen_[b] = 1;
            touched_.push_back(b);
          }
          g_hist_[b] += g[static_cast<std::size_t>(i)];
          h_hist_[b] += h[static_cast<std::size_t>(i)];
        }
        std::sort(touched_.begin(), touched_.end());
        double gl = 0, hl = 0;
        for (std::size_t t = 0; t + 1 < touched_.size(); ++t) {
          gl += g_hist_[touched_[t]];
          hl += h_hist_[touched_[t]];
          const double gr = gs - gl, hr = hs - hl;
          if (hl < params_.min_child_weight || hr < params_.min_child_weight) continue;
          const double gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent);
          if (gain > best) {
            best = gain;
            best_feature = j;
            best_bin = touched_[t];
          }
        }
        for (auto b : touched_) {
          g_hist_[b] = h_hist_[b] = 0.0;
          seen_[b] = 0;
        }
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
      stack.push_back({l + 1, work.depth + 1, std::move(right)});
      stack.push_back({l, work.depth + 1, std::move(left)});
    }
    return tree;
  }

 private:
  const BinnedMatrix& bins_;
  const BoostParams& params_;
  std::vector<double> g_hist_, h_hist_;
  std::vector<char> seen_;
  std::vector<std::uint16_t> touched_;
};

void check_columns(const BoostModel& model, Eigen::Index cols) {
  if (!model.fitted) throw StateError("boosting model is not fitted");
  if (cols != model.n_features) throw SchemaError("column count differs from training");
}

}  // namespace

std::pair<double, double> logistic_grad_hess(double margin, double label) {
  const double p = sigmoid(margin);
  return {p - label, p * (1.0 - p)};
}

BoostModel fit_gbt(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y, const BoostParams& params,
                   std::uint64_t seed) {
  check_params(params);
  if (x.rows() != y.size()) throw DomainError("row count of X and y differ");
  if (x.rows() < 2) throw ParameterError("boosting needs at least two rows");
  const double ybar = y.mean();
  if (ybar <= 0.0 || ybar >= 1.0) throw FitError("labels are constant");

  BoostModel model;
  model.params = params;
  model.seed = seed;
  model.n_features = static_cast<int>(x.cols());
  model.base_margin = logit(ybar);
  model.fitted = true;

  const int n = static_cast<int>(x.rows());
  const int p = static_cast<int>(x.cols());
  const int n_rows = std::max(1, static_cast<int>(std::lround(params.subsample * n)));
  const int n_cols = std::max(1, static_cast<int>(std::floor(params.colsample * p)));
  const BinnedMatrix bins(x);
  BoostTreeBuilder builder(bins, model.params);
  std::vector<double> margin(static_cast<std::size_t>(n), model.base_margin);
  std::vector<double> g(static_cast<std::size_t>(n)), h(static_cast<std::size_t>(n));
  for (int r = 0; r < params.n_rounds; ++r) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    const auto rows = sample_without_replacement(n, n_rows, rng);
    const auto cols = sample_without_replacement(p, n_cols, rng);
    for (int i = 0; i < n; ++i) {
      const auto [gi, hi] = logistic_grad_hess(margin[static_cast<std::size_t>(i)], y(i));
      g[static_cast<std::size_t>(i)] = gi;
      h[static_cast<std::size_t>(i)] = hi;
    }
    model.trees.push_back(builder.build(rows, cols, g, h));
    const auto& tree = model.trees.back();
    for (int i = 0; i < n; ++i) margin[static_cast<std::size_t>(i)] += tree.predict(x.row(i));
  }
  return model;
}

Vector predict_margin(const BoostModel& model, const Eigen::Ref<const Matrix>& x, int rounds) {
  check_columns(model, x.cols());
  const auto total = static_cast<int>(model.trees.size());
  if (rounds < 0) rounds = total;
  if (rounds > total) throw ParameterError("model has only " + std::to_string(total) + " rounds");
  Vector m = Vector::Constant(x.rows(), model.base_margin);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    for (int t = 0; t < rounds; ++t) m(i) += model.trees[static_cast<std::size_t>(t)].predict(row);
  }
  return m;
}

Vector predict_proba(const BoostModel& model, const Eigen::Ref<const Matrix>& x, int rounds) {
  return predict_margin(model, x, rounds).unaryExpr([](double m) { return sigmoid(m); });
}

Matrix staged_proba(const BoostModel& model, const Eigen::Ref<const Matrix>& x, const std::vector<int>& checkpoints) {
  check_columns(model, x.cols());
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end())) throw ParameterError("checkpoints must ascend");
  if (!checkpoints.empty() && (checkpoints.front() < 0 || checkpoints.back() > static_cast<int>(model.trees.size())))
    throw ParameterError("checkpoint outside the fitted rounds");
  Matrix out(x.rows(), static_cast<Eigen::Index>(checkpoints.size()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    double m = model.base_margin;
    int t = 0;
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      for (; t < checkpoints[c]; ++t) m += model.trees[static_cast<std::size_t>(t)].predict(row);
      out(i, static_cast<Eigen::Index>(c)) = sigmoid(m);
    }
  }
  return out;
}

Vector permutation_importance(const BoostModel& model, const Eigen::Ref<const Matrix>& x,
                              const Eigen::Ref<const Vector>& y, std::uint64_t seed, int repeats) {
  check_columns(model, x.cols());
  if (repeats < 1) throw ParameterError("repeats must be >= 1");
  const double base = tuneval::auc_rank(predict_proba(model, x), y);
  Vector out = Vector::Zero(x.cols());
  Matrix shuffled = x;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const bool used = std::any_of(model.trees.begin(), model.trees.end(),
                                  [j](const Tree& t) { return t.uses_feature(static_cast<int>(j)); });
    if (!used) continue;
    double drop = 0;
    for (int r = 0; r < repeats; ++r) {
      std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(r)));
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::shuffle(order.begin(), order.end(), rng);
      for (Eigen::Index i = 0; i < x.rows(); ++i) shuffled(i, j) = x(order[static_cast<std::size_t>(i)], j);
      drop += base - tuneval::auc_rank(predict_proba(model, shuffled), y);
    }
    shuffled.col(j) = x.col(j);
    out(j) = drop / repeats;
  }
  return out;
}

}  // namespace ew::learners
