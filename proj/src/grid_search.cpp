#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "earlywarn/errors.hpp"
#include "earlywarn/parallel.hpp"
#include "earlywarn/tuneval.hpp"

namespace ew::tuneval {
namespace {

using namespace learners;

constexpr double kTieTolerance = 1e-12;

Matrix take_rows(const Eigen::Ref<const Matrix>& x, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
  return out;
}

Vector take(const Eigen::Ref<const Vector>& y, const std::vector<int>& rows) {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Eigen::Index>(r)) = y(rows[r]);
  return out;
}

struct Fold {
  int index;
  std::vector<int> train, test;
};

// Configurations that share one fit per fold: an EN alpha with its lambdas, or
// one boosting configuration with its round checkpoints.
struct Group {
  HyperParams base;
  std::vector<std::size_t> candidates;  // indices into the expanded candidate list
};

// Mean of the per-fold AUCs; folds whose test part holds one class do not count.
double mean_fold_auc(const Vector& oof, const Eigen::Ref<const Vector>& y, const std::vector<Fold>& folds) {
  double sum = 0;
  int used = 0;
  for (const auto& fold : folds) {
    std::vector<double> pos, neg;
    for (int i : fold.test) (y(i) == 1.0 ? pos : neg).push_back(oof(i));
    if (pos.empty() || neg.empty()) continue;
    sum += auc_rank(pos, neg);
    ++used;
  }
  return used ? sum / used : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

bool more_regularized(const HyperParams& a, const HyperParams& b) {
  if (a.index() != b.index()) throw ParameterError("cannot compare different learners");
  if (const auto* ea = std::get_if<ElasticNetParams>(&a)) {
    const auto& eb = std::get<ElasticNetParams>(b);
    if (ea->lambda != eb.lambda) return ea->lambda > eb.lambda;
    return ea->alpha > eb.alpha;
  }
  if (const auto* fa = std::get_if<ForestParams>(&a)) {
    const auto& fb = std::get<ForestParams>(b);
    if (fa->min_node_size != fb.min_node_size) return fa->min_node_size > fb.min_node_size;
    if (fa->mtry != fb.mtry) return fa->mtry < fb.mtry;
    return fa->n_trees < fb.n_trees;
  }
  const auto& ga = std::get<BoostParams>(a);
  const auto& gb = std::get<BoostParams>(b);
  if (ga.max_depth != gb.max_depth) return ga.max_depth < gb.max_depth;
  if (ga.min_child_weight != gb.min_child_weight) return ga.min_child_weight > gb.min_child_weight;
  if (ga.n_rounds != gb.n_rounds) return ga.n_rounds < gb.n_rounds;
  if (ga.subsample != gb.subsample) return ga.subsample < gb.subsample;
  return ga.colsample < gb.colsample;
}

SearchResult grid_search_cv(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y,
                            const std::vector<HyperParams>& grid, const FoldPlan& plan,
                            const SearchOptions& options) {
  if (grid.empty()) throw ParameterError("empty hyperparameter grid");
  if (x.rows() != y.size() || static_cast<std::size_t>(y.size()) != plan.fold.size())
    throw DomainError("X, y and fold plan differ in row count");
  const auto kind = kind_of(grid.front());
  for (const auto& g : grid)
    if (kind_of(g) != kind) throw ParameterError("grid mixes learners");

  SearchResult result;
  std::vector<Fold> folds;
  for (int f = 0; f < plan.k; ++f) {
    Fold fold{f, plan.train_rows(f), plan.test_rows(f)};
    const Vector yt = take(y, fold.train);
    const double s = yt.sum();
    if (fold.test.empty() || s == 0.0 || s == static_cast<double>(yt.size())) {
      result.skipped_folds.push_back(f);
      continue;
    }
    folds.push_back(std::move(fold));
  }
  if (folds.empty()) throw FitError("every fold lacks one class in its training part");

  // Expand to candidates and group them by shared fit.
  std::vector<HyperParams> candidates;
  std::vector<Group> groups;
  if (kind == LearnerKind::elastic_net) {
    std::map<double, std::size_t> by_alpha;
    for (const auto& g : grid) {
      const auto& e = std::get<ElasticNetParams>(g);
      auto [it, fresh] = by_alpha.try_emplace(e.alpha, groups.size());
      if (fresh) groups.push_back({g, {}});
      groups[it->second].candidates.push_back(candidates.size());
      candidates.push_back(g);
    }
  } else if (kind == LearnerKind::boost) {
    for (const auto& g : grid) {
      const auto& b = std::get<BoostParams>(g);
      Group group{g, {}};
      std::vector<int> rounds;
      for (int c : options.boost_checkpoints)
        if (c >= 1 && c <= b.n_rounds) rounds.push_back(c);
      if (rounds.empty() || rounds.back() != b.n_rounds) rounds.push_back(b.n_rounds);
      std::sort(rounds.begin(), rounds.end());
      rounds.erase(std::unique(rounds.begin(), rounds.end()), rounds.end());
      for (int r : rounds) {
        BoostParams staged = b;
        staged.n_rounds = r;
        group.candidates.push_back(candidates.size());
        candidates.emplace_back(staged);
      }
      groups.push_back(std::move(group));
    }
  } else {
    for (const auto& g : grid) {
      groups.push_back({g, {candidates.size()}});
      candidates.push_back(g);
    }
  }

  const Vector nan_column = Vector::Constant(y.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<Vector> oof(candidates.size(), nan_column);
  parallel_for(groups.size() * folds.size(), options.jobs, [&](std::size_t unit) {
    const auto& group = groups[unit / folds.size()];
    const auto& fold = folds[unit % folds.size()];
    const Matrix xt = take_rows(x, fold.train);
    const Vector yt = take(y, fold.train);
    const Matrix xv = take_rows(x, fold.test);
    const auto fold_seed = derive_seed(options.seed, static_cast<std::uint64_t>(fold.index));
    const auto store = [&](std::size_t cand, const Vector& p) {
      for (std::size_t r = 0; r < fold.test.size(); ++r) oof[cand](fold.test[r]) = p(static_cast<Eigen::Index>(r));
    };
    switch (kind) {
      case LearnerKind::elastic_net: {
        std::vector<double> lambdas;
        for (auto c : group.candidates) lambdas.push_back(std::get<ElasticNetParams>(candidates[c]).lambda);
        const auto path =
            fit_elastic_net_path(xt, yt, std::get<ElasticNetParams>(group.base).alpha, lambdas, options.control);
        for (std::size_t k = 0; k < path.size(); ++k) store(group.candidates[k], predict_proba(path[k], xv));
        break;
      }
      case LearnerKind::forest:
        store(group.candidates.front(),
              predict_proba(fit_probability_forest(xt, yt, std::get<ForestParams>(group.base), fold_seed), xv));
        break;
      case LearnerKind::boost: {
        std::vector<int> rounds;
        for (auto c : group.candidates) rounds.push_back(std::get<BoostParams>(candidates[c]).n_rounds);
        const auto model = fit_gbt(xt, yt, std::get<BoostParams>(group.base), fold_seed);
        const Matrix staged = staged_proba(model, xv, rounds);
        for (std::size_t k = 0; k < rounds.size(); ++k)
          store(group.candidates[k], staged.col(static_cast<Eigen::Index>(k)));
        break;
      }
    }
  });

  std::size_t best = 0;
  double best_auc = -1.0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const double auc = mean_fold_auc(oof[c], y, folds);
    result.table.push_back({candidates[c], auc});
    if (!std::isnan(auc) && auc > best_auc) best_auc = auc;
  }
  bool found = false;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const double auc = result.table[c].cv_auc;
    if (std::isnan(auc) || auc < best_auc - kTieTolerance) continue;
    if (!found || more_regularized(candidates[c], candidates[best])) best = c;
    found = true;
  }
  if (!found) throw FitError("no configuration produced a cross-validated AUC");
  result.best = candidates[best];
  result.best_auc = result.table[best].cv_auc;
  result.oof = oof[best];
  return result;
}

}  // namespace ew::tuneval
