#include <doctest.h>

#include <random>

#include "earlywarn/calibrate.hpp"
#include "earlywarn/errors.hpp"
#include "earlywarn/tuneval.hpp"

using namespace ew;
using namespace ew::calibrate;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct Sample {
  Vector p, y;
};

// Labels drawn from sigmoid(z); predictions are sigmoid(spread * z).
Sample simulate(std::uint64_t seed, int n, double spread) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.5);
  std::uniform_real_distribution<double> U;
  Sample s{Vector(n), Vector(n)};
  for (int i = 0; i < n; ++i) {
    const double z = N(rng);
    s.y(i) = U(rng) < sigmoid(z) ? 1.0 : 0.0;
    s.p(i) = sigmoid(spread * z);
  }
  return s;
}

}  // namespace

TEST_SUITE("calibrate") {
  TEST_CASE("calibrated scores give the identity map") {
    const auto s = simulate(11, 5000, 1.0);
    const auto fit = fit_platt(s.p, s.y);
    CHECK(std::abs(fit.A + 1.0) < 0.1);
    CHECK(std::abs(fit.B) < 0.1);
  }

  TEST_CASE("overconfident scores are pulled toward the true rate") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U;
    const int n = 4000;
    Vector p(n), y(n);
    for (int i = 0; i < n; ++i) {
      const bool high = i % 2 == 0;
      p(i) = high ? 0.95 : 0.05;
      y(i) = U(rng) < (high ? 0.7 : 0.3) ? 1.0 : 0.0;
    }
    const Vector q = apply_platt(fit_platt(p, y), p);
    CHECK(std::abs(q(0) - 0.7) < 0.03);
    CHECK(std::abs(q(1) - 0.3) < 0.03);
  }

  TEST_CASE("one class is an error") {
    const Vector p = Vector::LinSpaced(10, 0.1, 0.9);
    CHECK_THROWS_AS(fit_platt(p, Vector::Ones(10)), DomainError);
    CHECK_THROWS_AS(fit_platt(p, Vector::Zero(10)), DomainError);
  }

  TEST_CASE("identity parameters leave probabilities alone") {
    const Vector p = Vector::LinSpaced(50, 0.01, 0.99);
    const Vector q = apply_platt(PlattParams{-1.0, 0.0, 0}, p);
    CHECK((q - p).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("negative slopes preserve order and AUC") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> U;
    for (int rep = 0; rep < 50; ++rep) {
      const int n = 100;
      Vector p(n), y(n);
      for (int i = 0; i < n; ++i) {
        p(i) = U(rng);
        y(i) = U(rng) < p(i) ? 1.0 : 0.0;
      }
      if (y.sum() == 0 || y.sum() == n) continue;
      const PlattParams params{-0.2 - 3.0 * U(rng), U(rng) - 0.5, 0};
      const Vector q = apply_platt(params, p);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (p(i) < p(j)) CHECK(q(i) <= q(j));
      CHECK(std::abs(tuneval::auc_rank(q, y) - tuneval::auc_rank(p, y)) <= 1e-12);
    }
  }

  TEST_CASE("Platt never raises the in-sample log loss") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto s = simulate(seed, 300, 0.5 + 0.15 * static_cast<double>(seed));
      const Vector q = apply_platt(fit_platt(s.p, s.y), s.p);
      CHECK(log_loss(q, s.y) <= log_loss(s.p, s.y) + 1e-9);
    }
  }

  TEST_CASE("overconfidence slope moves into the calibrated band") {
    const auto s = simulate(21, 2000, 2.5);
    const auto before = calibration_curve(s.p, s.y);
    CHECK(before.slope < 0.8);
    const auto after = calibration_curve(apply_platt(fit_platt(s.p, s.y), s.p), s.y);
    CHECK(after.slope >= 0.8);
    CHECK(after.slope <= 1.2);
  }

  TEST_CASE("equal-count bins") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U;
    for (int n : {10, 11, 57, 1003}) {
      Vector p(n), y(n);
      for (int i = 0; i < n; ++i) {
        p(i) = U(rng);
        y(i) = U(rng) < 0.4 ? 1.0 : 0.0;
      }
      const auto c = calibration_curve(p, y, 10);
      int total = 0, lo = n, hi = 0;
      for (const auto& b : c.bins) {
        total += b.count;
        lo = std::min(lo, b.count);
        hi = std::max(hi, b.count);
        CHECK((b.observed >= 0.0 && b.observed <= 1.0));
      }
      CHECK(total == n);
      CHECK(hi - lo <= 1);
    }
    CHECK_THROWS_AS(calibration_curve(Vector::Constant(5, 0.5), Vector::Zero(5), 10), ParameterError);
  }

  TEST_CASE("perfect predictions sit on the diagonal") {
    Vector y(40);
    for (int i = 0; i < 40; ++i) y(i) = i % 3 == 0 ? 1.0 : 0.0;
    const auto c = calibration_curve(y, y, 5);
    for (const auto& b : c.bins) CHECK(std::abs(b.mean_predicted - b.observed) < 1e-5);
    // The logistic refit diverges: either a huge slope or the NaN sentinel.
    CHECK((std::isnan(c.slope) || c.slope > 10.0));
  }

  TEST_CASE("constant one half") {
    Vector y(20);
    for (int i = 0; i < 20; ++i) y(i) = i % 2;
    const auto c = calibration_curve(Vector::Constant(20, 0.5), y, 4);
    for (const auto& b : c.bins) CHECK(b.mean_predicted == 0.5);
    double observed = 0.0;
    for (const auto& b : c.bins) observed += b.observed * b.count;
    CHECK(observed / 20.0 == 0.5);
    CHECK(std::isnan(c.slope));
    CHECK(std::isnan(c.intercept));
  }

  TEST_CASE("Platt is nearly idempotent on large samples") {
    const auto s = simulate(31, 6000, 1.8);
    const Vector q = apply_platt(fit_platt(s.p, s.y), s.p);
    const auto again = fit_platt(q, s.y);
    const Vector r = apply_platt(again, q);
    CHECK((r - q).cwiseAbs().maxCoeff() < 1e-3);
  }

  TEST_CASE("log loss and Brier score") {
    Vector p(2), y(2);
    p << 0.8, 0.4;
    y << 1.0, 0.0;
    CHECK(log_loss(p, y) == doctest::Approx(-(std::log(0.8) + std::log(0.6)) / 2));
    CHECK(brier_score(p, y) == doctest::Approx((0.04 + 0.16) / 2));
  }
}
