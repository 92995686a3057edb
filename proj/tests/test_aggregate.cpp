#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <numeric>
#include <random>

#include "earlywarn/aggregate.hpp"
#include "earlywarn/errors.hpp"
#include "oracles.hpp"

using namespace ew;
using namespace ew::aggregate;
using features::FeatureId;
using features::WeeklyFeatures;

namespace {

// One student, columns eng1.I.redu1 and per2.P.redu1, values per week.
WeeklyFeatures single(const std::vector<double>& eng1, const std::vector<double>& per2) {
  WeeklyFeatures wf;
  wf.students = {"s"};
  wf.columns = {FeatureId::parse("eng1.I.redu1.raw_week"), FeatureId::parse("per2.P.redu1.raw_week")};
  for (std::size_t w = 0; w < eng1.size(); ++w) {
    Matrix m(1, 2);
    m << eng1[w], per2[w];
    wf.weeks.push_back(m);
  }
  return wf;
}

WeeklyFeatures random_weekly(std::mt19937_64& rng, int n, int weeks) {
  WeeklyFeatures wf;
  for (int i = 0; i < n; ++i) wf.students.push_back("s" + std::to_string(1000 + i));
  for (const char* c : {"eng1.I.redu1.raw_week", "eng5.NI.redu2.raw_week", "per2.P.redu1.raw_week",
                        "forum.course_level.na.raw_week"})
    wf.columns.push_back(FeatureId::parse(c));
  std::lognormal_distribution<double> d(0.0, 1.0);
  for (int w = 0; w < weeks; ++w) {
    Matrix m(n, 4);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = d(rng);
    wf.weeks.push_back(m);
  }
  return wf;
}

double at(const FeatureFrame& f, const std::string& name, Eigen::Index row = 0) {
  const auto j = f.column_index(name);
  REQUIRE(j >= 0);
  return f.values(row, j);
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST_SUITE("aggregate") {
  TEST_CASE("progressive mean and sample SD") {
    const auto wf = single({2, 4, 6, 0}, {0, 0, 0, 0});
    const auto f = aggregate_progressive(wf, 3).frame;
    CHECK(at(f, "eng1.I.redu1.cum_mean") == 4.0);
    CHECK(at(f, "eng1.I.redu1.cum_sd") == 2.0);
    const auto one = aggregate_progressive(single({5}, {0}), 1).frame;
    CHECK(at(one, "eng1.I.redu1.cum_mean") == 5.0);
    CHECK(at(one, "eng1.I.redu1.cum_sd") == 0.0);
    const auto zero = aggregate_progressive(wf, 4).frame;
    CHECK(at(zero, "per2.P.redu1.cum_mean") == 0.0);
    CHECK(at(zero, "per2.P.redu1.cum_sd") == 0.0);
  }

  TEST_CASE("early reset before week 5 equals progressive") {
    std::mt19937_64 rng(1);
    const auto wf = random_weekly(rng, 20, 12);
    for (int k = 1; k <= 4; ++k) {
      const auto a = aggregate_progressive(wf, k).frame;
      const auto b = aggregate_early_reset(wf, k).frame;
      CHECK(a.columns == b.columns);
      CHECK(bitwise_equal(a.values, b.values));
    }
  }

  TEST_CASE("frozen and reset blocks") {
    const auto wf = single({2, 4, 6, 8, 10, 12}, {1, 1, 1, 1, 1, 1});
    const auto f = aggregate_early_reset(wf, 6).frame;
    CHECK(at(f, "frozen.eng1.I.redu1.cum_mean") == 5.0);
    CHECK(at(f, "frozen.eng1.I.redu1.cum_sd") == doctest::Approx(2.5819889).epsilon(1e-7));
    CHECK(at(f, "reset.eng1.I.redu1.cum_mean") == 11.0);
    CHECK(at(f, "reset.eng1.I.redu1.cum_sd") == doctest::Approx(std::sqrt(2.0)));
  }

  TEST_CASE("performance columns exist only in the frozen block") {
    std::mt19937_64 rng(2);
    const auto wf = random_weekly(rng, 5, 12);
    const auto f = aggregate_early_reset(wf, 8).frame;
    CHECK(f.column_index("frozen.per2.P.redu1.cum_mean") >= 0);
    CHECK(f.column_index("frozen.per2.P.redu1.cum_sd") >= 0);
    CHECK(f.column_index("reset.per2.P.redu1.cum_mean") < 0);
    CHECK(f.column_index("reset.eng1.I.redu1.cum_mean") >= 0);
  }

  TEST_CASE("progressive columns are the same for every week") {
    std::mt19937_64 rng(3);
    const auto wf = random_weekly(rng, 8, 12);
    const auto first = aggregate_progressive(wf, 1).frame.columns;
    for (int k = 2; k <= 12; ++k) CHECK(aggregate_progressive(wf, k).frame.columns == first);
    const auto reset5 = aggregate_early_reset(wf, 5).frame.columns;
    for (int k = 6; k <= 12; ++k) CHECK(aggregate_early_reset(wf, k).frame.columns == reset5);
  }

  TEST_CASE("the frozen block is bitwise stable from week 5 on") {
    std::mt19937_64 rng(4);
    const auto wf = random_weekly(rng, 30, 12);
    const auto frozen_cols = [](const FeatureFrame& f) {
      std::vector<Eigen::Index> idx;
      for (std::size_t j = 0; j < f.columns.size(); ++j)
        if (f.columns[j].rfind("frozen.", 0) == 0) idx.push_back(static_cast<Eigen::Index>(j));
      Matrix m(f.rows(), static_cast<Eigen::Index>(idx.size()));
      for (std::size_t c = 0; c < idx.size(); ++c) m.col(static_cast<Eigen::Index>(c)) = f.values.col(idx[c]);
      return m;
    };
    const Matrix ref = frozen_cols(aggregate_early_reset(wf, 5).frame);
    CHECK(ref.cols() == 8);
    for (int k = 6; k <= 12; ++k) CHECK(bitwise_equal(frozen_cols(aggregate_early_reset(wf, k).frame), ref));
  }

  TEST_CASE("streaming recomputation matches") {
    std::mt19937_64 rng(5);
    const auto wf = random_weekly(rng, 25, 12);
    for (int k = 1; k <= 12; ++k) {
      const auto f = aggregate_progressive(wf, k).frame;
      for (Eigen::Index i = 0; i < f.rows(); ++i)
        for (std::size_t j = 0; j < wf.columns.size(); ++j) {
          oracle::Welford acc;
          for (int w = 0; w < k; ++w) acc.push(wf.weeks[static_cast<std::size_t>(w)](i, static_cast<Eigen::Index>(j)));
          const double mean = f.values(i, 2 * static_cast<Eigen::Index>(j));
          const double sd = f.values(i, 2 * static_cast<Eigen::Index>(j) + 1);
          CHECK(std::abs(mean - acc.mean()) <= 1e-12 * std::max(1.0, std::abs(acc.mean())));
          CHECK(std::abs(sd - acc.sd()) <= 1e-12 * std::max(1.0, acc.sd()));
        }
    }
  }

  TEST_CASE("aggregation commutes with row permutations") {
    std::mt19937_64 rng(6);
    const auto wf = random_weekly(rng, 15, 12);
    std::vector<int> perm(15);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    WeeklyFeatures shuffled = wf;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      shuffled.students[i] = wf.students[static_cast<std::size_t>(perm[i])];
      for (std::size_t w = 0; w < wf.weeks.size(); ++w)
        shuffled.weeks[w].row(static_cast<Eigen::Index>(i)) = wf.weeks[w].row(perm[i]);
    }
    for (auto s : {Strategy::progressive, Strategy::early_reset}) {
      const auto a = aggregate::aggregate(wf, s, 9).frame;
      const auto b = aggregate::aggregate(shuffled, s, 9).frame;
      for (std::size_t i = 0; i < perm.size(); ++i)
        CHECK(b.values.row(static_cast<Eigen::Index>(i)) == a.values.row(perm[i]));
    }
  }

  TEST_CASE("weeks outside the course are rejected") {
    const auto wf = single({1, 2}, {0, 0});
    CHECK_THROWS_AS(aggregate_progressive(wf, 0), RangeError);
    CHECK_THROWS_AS(aggregate_progressive(wf, 3), RangeError);
  }
}
