#include <doctest.h>

#include <random>

#include "earlywarn/errors.hpp"
#include "earlywarn/hypergrid.hpp"
#include "earlywarn/tuneval.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace ew;
using namespace ew::tuneval;
using learners::BoostParams;
using learners::ElasticNetParams;
using learners::ForestParams;
using learners::HyperParams;
using testing::random_labels;
using testing::to_vector;

namespace {

std::vector<double> random_scores(std::mt19937_64& rng, std::size_t n, int levels) {
  // Few levels force ties; levels <= 0 means continuous.
  std::uniform_real_distribution<double> U;
  std::uniform_int_distribution<int> L(0, std::max(levels, 1));
  std::vector<double> s(n);
  for (auto& v : s) v = levels > 0 ? static_cast<double>(L(rng)) / levels : U(rng);
  return s;
}

}  // namespace

TEST_SUITE("auc") {
  TEST_CASE("pair counting examples") {
    CHECK(auc_rank(std::vector<double>{0.9, 0.4}, std::vector<double>{0.5, 0.1}) == 0.75);
    CHECK(auc_rank(std::vector<double>{0.9, 0.8}, std::vector<double>{0.5, 0.1}) == 1.0);
    CHECK(auc_rank(std::vector<double>{0.3, 0.3}, std::vector<double>{0.3, 0.3, 0.3}) == 0.5);
  }

  TEST_CASE("matches trapezoidal ROC integration") {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 300; ++rep) {
      const std::size_t n = 2 + rep % 120;
      const auto y = random_labels(rng, n, 0.3);
      const auto s = random_scores(rng, n, rep % 3 == 0 ? 0 : 1 + rep % 7);
      CHECK(std::abs(auc_rank(to_vector(s), to_vector(y)) - oracle::trapezoid_auc(s, y)) <= 1e-12);
    }
  }

  TEST_CASE("invariant under increasing transforms") {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 50; ++rep) {
      const auto y = to_vector(random_labels(rng, 80));
      const auto s = to_vector(random_scores(rng, 80, rep % 2 ? 5 : 0));
      const Vector t = (3.0 * s.array()).exp() + 2.0;
      CHECK(auc_rank(s, y) == auc_rank(t, y));
    }
  }

  TEST_CASE("needs both classes") {
    CHECK_THROWS_AS(auc_rank(std::vector<double>{0.1}, std::vector<double>{}), DomainError);
  }
}

TEST_SUITE("folds") {
  TEST_CASE("ten and ten over ten folds") {
    std::vector<int> y(20, 0);
    std::fill(y.begin(), y.begin() + 10, 1);
    const auto plan = stratified_kfold(to_vector(y), 10, 3);
    for (int f = 0; f < 10; ++f) {
      const auto test = plan.test_rows(f);
      REQUIRE(test.size() == 2);
      CHECK(y[static_cast<std::size_t>(test[0])] + y[static_cast<std::size_t>(test[1])] == 1);
    }
  }

  TEST_CASE("fourteen positives among a hundred") {
    std::vector<int> y(100, 0);
    std::fill(y.begin(), y.begin() + 14, 1);
    const auto plan = stratified_kfold(to_vector(y), 10, 9);
    for (int f = 0; f < 10; ++f) {
      int pos = 0;
      const auto test = plan.test_rows(f);
      for (int i : test) pos += y[static_cast<std::size_t>(i)];
      CHECK((pos == 1 || pos == 2));
      CHECK(test.size() == 10);
      CHECK(plan.train_rows(f).size() == 90);
    }
  }

  TEST_CASE("deterministic under a seed") {
    std::mt19937_64 rng(4);
    const auto y = to_vector(random_labels(rng, 57));
    CHECK(stratified_kfold(y, 5, 11).fold == stratified_kfold(y, 5, 11).fold);
    CHECK(stratified_kfold(y, 5, 11).fold != stratified_kfold(y, 5, 12).fold);
  }

  TEST_CASE("too many folds for the minority class") {
    std::vector<int> y(30, 0);
    y[0] = y[1] = 1;
    CHECK_THROWS_AS(stratified_kfold(to_vector(y), 3, 1), ParameterError);
  }
}

TEST_SUITE("thresholds") {
  TEST_CASE("Youden on a separable set") {
    const Vector p = to_vector(std::vector<double>{0.2, 0.3, 0.6, 0.9});
    const Vector y = to_vector(std::vector<int>{0, 0, 1, 1});
    const auto t = youden_threshold(p, y);
    CHECK(t.value == doctest::Approx(0.45));
    CHECK(youden_j(p, y, t.value) == 1.0);
  }

  TEST_CASE("constant scores give J = 0") {
    const Vector p = Vector::Constant(6, 0.4);
    const Vector y = to_vector(std::vector<int>{0, 1, 0, 1, 1, 0});
    CHECK(youden_j(p, y, youden_threshold(p, y).value) == 0.0);
  }

  TEST_CASE("Youden attains the exhaustive maximum with the smallest threshold") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 300; ++rep) {
      const std::size_t n = 2 + rep % 60;
      const auto y = random_labels(rng, n);
      const auto s = random_scores(rng, n, rep % 2 ? 6 : 0);
      const auto t = youden_threshold(to_vector(s), to_vector(y));
      const auto scan = oracle::exhaustive_youden(s, y);
      CHECK(oracle::youden_j(s, y, t.value) == scan.best_j);
      // No smaller candidate reaches the same J.
      for (double c : {0.0, scan.smallest_argmax})
        if (c < t.value) CHECK(oracle::youden_j(s, y, c) < scan.best_j);
    }
  }

  TEST_CASE("prevalence matching flags the closest achievable count") {
    Vector p(100);
    for (int i = 0; i < 100; ++i) p(i) = (i + 0.5) / 100.0;
    const auto t = prevalence_threshold(p, 0.14);
    CHECK((p.array() >= t.value).count() == 14);
    Vector sym(4);
    sym << 0.1, 0.4, 0.6, 0.9;
    CHECK(prevalence_threshold(sym, 0.5).value == doctest::Approx(0.5));
  }

  TEST_CASE("heavy ties at the quantile") {
    std::mt19937_64 rng(6);
    for (int rep = 0; rep < 200; ++rep) {
      const std::size_t n = 5 + rep % 50;
      const auto s = random_scores(rng, n, 1 + rep % 4);
      const double target = 0.05 + 0.9 * (rep % 17) / 17.0;
      const auto t = prevalence_threshold(to_vector(s), target);
      const auto flagged = static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v >= t.value; }));
      // Every achievable count (ties move together) is at least as far from the target.
      std::vector<double> sorted = s;
      std::sort(sorted.begin(), sorted.end());
      double best = static_cast<double>(n) * target;  // flagging nobody
      for (double v : sorted) {
        const double c = static_cast<double>(std::count_if(s.begin(), s.end(), [&](double u) { return u >= v; }));
        best = std::min(best, std::abs(c - static_cast<double>(n) * target));
      }
      CHECK(std::abs(flagged - static_cast<double>(n) * target) == doctest::Approx(best));
    }
  }

  TEST_CASE("policy names") {
    CHECK(policy_from_string("youden_source") == ThresholdPolicy::youden_source);
    CHECK(policy_from_string("prevalence_target") == ThresholdPolicy::prevalence_target);
    CHECK_FALSE(policy_from_string("other").has_value());
  }
}

TEST_SUITE("metrics") {
  TEST_CASE("hand evaluated confusion matrix") {
    const auto m = metrics_from_confusion({3, 1, 1, 5});
    CHECK(m.accuracy == doctest::Approx(0.8));
    CHECK(m.sensitivity == doctest::Approx(0.75));
    CHECK(m.specificity == doctest::Approx(0.8333333));
    CHECK(m.f1 == doctest::Approx(0.75));
    CHECK(m.kappa == doctest::Approx(0.5833333));
  }

  TEST_CASE("perfect prediction") {
    const auto m = metrics_from_confusion({7, 0, 0, 9});
    CHECK(m.accuracy == 1.0);
    CHECK(m.sensitivity == 1.0);
    CHECK(m.specificity == 1.0);
    CHECK(m.f1 == 1.0);
    CHECK(m.kappa == 1.0);
  }

  TEST_CASE("flagging everyone at fourteen percent prevalence") {
    const auto m = metrics_from_confusion({14, 86, 0, 0});
    CHECK(m.sensitivity == 1.0);
    CHECK(m.specificity == 0.0);
    CHECK(m.kappa == 0.0);
  }

  TEST_CASE("undefined ratios are NaN") {
    const auto m = metrics_from_confusion({0, 0, 0, 10});
    CHECK(std::isnan(m.sensitivity));
    CHECK(std::isnan(m.f1));
    CHECK(std::isnan(m.kappa));
    CHECK(m.specificity == 1.0);
  }

  TEST_CASE("exact agreement with rational arithmetic") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> cell(0, 40);
    for (int rep = 0; rep < 200; ++rep) {
      ConfusionMatrix cm{cell(rng), cell(rng), cell(rng), cell(rng)};
      if (rep % 10 == 0) cm.tp = cm.fn = 0;
      if (rep % 10 == 1) cm.tp = cm.fp = 0;
      const auto m = metrics_from_confusion(cm);
      const auto e = oracle::exact_metrics(cm.tp, cm.fp, cm.fn, cm.tn);
      const auto same = [](double v, bool defined, const oracle::Rational& r) {
        return defined ? v == oracle::to_double(r) : std::isnan(v);
      };
      CHECK(same(m.accuracy, e.acc_defined, e.acc));
      CHECK(same(m.sensitivity, e.sens_defined, e.sens));
      CHECK(same(m.specificity, e.spec_defined, e.spec));
      CHECK(same(m.f1, e.f1_defined, e.f1));
      CHECK(same(m.kappa, e.kappa_defined, e.kappa));
      if (e.kappa_defined) CHECK((m.kappa >= -1.0 && m.kappa <= 1.0));
    }
  }

  TEST_CASE("constant predictions have zero kappa") {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 50; ++rep) {
      const auto y = to_vector(random_labels(rng, 40));
      for (double thr : {0.0, 1.1}) {
        const auto m = metrics_from_confusion(confusion(Vector::Constant(40, 0.5), y, thr));
        CHECK(m.kappa == 0.0);
      }
    }
  }
}

TEST_SUITE("grid_search") {
  TEST_CASE("a one-point grid returns that point") {
    std::mt19937_64 rng(1);
    const auto y = to_vector(random_labels(rng, 60));
    const Matrix x = Matrix::Random(60, 3);
    const auto r = grid_search_cv(x, y, {ForestParams{1, 5, 10}}, stratified_kfold(y, 5, 1));
    CHECK(std::get<ForestParams>(r.best).mtry == 1);
    CHECK(r.table.size() == 1);
  }

  TEST_CASE("moderate lambda beats full shrinkage on planted signal") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> N;
    const int n = 200;
    Matrix x(n, 4);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 4; ++j) x(i, j) = N(rng);
      y(i) = x(i, 0) + 0.5 * N(rng) > 0 ? 1.0 : 0.0;
    }
    const std::vector<HyperParams> grid = {ElasticNetParams{1.0, 1000.0}, ElasticNetParams{1.0, 0.01}};
    const auto r = grid_search_cv(x, y, grid, stratified_kfold(y, 10, 3));
    CHECK(r.table[1].cv_auc > r.table[0].cv_auc);
    CHECK(r.table[0].cv_auc == 0.5);
    CHECK(std::get<ElasticNetParams>(r.best).lambda == 0.01);
  }

  TEST_CASE("ties go to the larger lambda") {
    std::mt19937_64 rng(3);
    const auto y = to_vector(random_labels(rng, 50));
    const Matrix x = Matrix::Random(50, 2);
    // Both lambdas shrink everything, so every fold AUC is 0.5.
    const std::vector<HyperParams> grid = {ElasticNetParams{1.0, 200.0}, ElasticNetParams{1.0, 500.0}};
    const auto r = grid_search_cv(x, y, grid, stratified_kfold(y, 5, 1));
    CHECK(r.table[0].cv_auc == r.table[1].cv_auc);
    CHECK(std::get<ElasticNetParams>(r.best).lambda == 500.0);
  }

  TEST_CASE("regularization order") {
    CHECK(more_regularized(ElasticNetParams{0.5, 2.0}, ElasticNetParams{1.0, 1.0}));
    CHECK(more_regularized(ElasticNetParams{1.0, 1.0}, ElasticNetParams{0.5, 1.0}));
    CHECK(more_regularized(ForestParams{5, 20, 500}, ForestParams{2, 10, 100}));
    CHECK(more_regularized(ForestParams{2, 10, 500}, ForestParams{3, 10, 100}));
    BoostParams a, b;
    a.max_depth = 3;
    b.max_depth = 4;
    CHECK(more_regularized(a, b));
    CHECK_FALSE(more_regularized(b, a));
    CHECK_THROWS_AS(more_regularized(a, ForestParams{}), ParameterError);
  }

  TEST_CASE("out-of-fold predictions cover every row once") {
    std::mt19937_64 rng(4);
    const auto y = to_vector(random_labels(rng, 80));
    const Matrix x = Matrix::Random(80, 3);
    BoostParams p;
    p.n_rounds = 20;
    p.max_depth = 2;
    const auto r = grid_search_cv(x, y, {p}, stratified_kfold(y, 4, 2));
    CHECK_FALSE(r.oof.array().isNaN().any());
    // Round checkpoints 10 and 20 are both candidates.
    CHECK(r.table.size() == 2);
    CHECK(r.skipped_folds.empty());
  }

  TEST_CASE("search results do not depend on the worker count") {
    std::mt19937_64 rng(5);
    const auto y = to_vector(random_labels(rng, 90));
    const Matrix x = Matrix::Random(90, 4);
    const auto grid = learners::configurations(learners::make_grid(learners::GridPreset::small, 4),
                                               learners::LearnerKind::forest);
    SearchOptions one, three;
    three.jobs = 3;
    const auto folds = stratified_kfold(y, 3, 1);
    const auto a = grid_search_cv(x, y, grid, folds, one), b = grid_search_cv(x, y, grid, folds, three);
    CHECK(a.best_auc == b.best_auc);
    CHECK(a.oof == b.oof);
  }
}
