#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fdmv/common.hpp"
#include "fdmv/special.hpp"

using namespace fdmv;

namespace {

struct OracleRow {
  double alpha, lambda, t, value, dvalue;
};

// mpmath reference values at 50+ digits.
constexpr OracleRow kOracle[] = {
#include "ml_oracle_values.inc"
};

}  // namespace

TEST_CASE("gamma and digamma") {
  CHECK(fdmv::gamma(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(fdmv::gamma(0.5) == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-14));
  CHECK(fdmv::gamma(-0.5) == doctest::Approx(-2.0 * std::sqrt(std::numbers::pi)).epsilon(1e-14));
  CHECK(fdmv::gamma(0.1) == doctest::Approx(9.513507698668732).epsilon(1e-14));
  CHECK_THROWS_AS(fdmv::gamma(0.0), ValidationError);
  CHECK_THROWS_AS(fdmv::gamma(-2.0), ValidationError);

  const double euler = 0.57721566490153286;
  CHECK(digamma(1.0) == doctest::Approx(-euler).epsilon(1e-14));
  CHECK(digamma(2.0) == doctest::Approx(1.0 - euler).epsilon(1e-14));
  CHECK(digamma(0.5) == doctest::Approx(-euler - 2.0 * std::log(2.0)).epsilon(1e-14));
  for (double x : {0.3, 1.7, 4.2, 11.0}) {
    CHECK(digamma(x + 1.0) - digamma(x) == doctest::Approx(1.0 / x).epsilon(1e-12));
    const double h = 1e-5;
    const double fd = (std::lgamma(x + h) - std::lgamma(x - h)) / (2 * h);
    CHECK(std::abs(digamma(x) - fd) < 1e-8);
  }
  CHECK_THROWS_AS(digamma(0.0), ValidationError);
}

TEST_CASE("Mittag-Leffler closed forms") {
  CHECK(ml(0.5, 0.0, 3.0) == 1.0);
  CHECK(ml(0.3, 2.0, 0.0) == 1.0);
  for (double lt : {0.1, 1.0, 3.0, 7.5}) CHECK(std::abs(ml(1.0, lt, 1.0) - std::exp(-lt)) < 1e-14);
  // E_{1/2}(-x) = exp(x^2) erfc(x).
  for (double x : {0.05, 0.5, 1.0, 2.0, 4.0, 10.0}) {
    const double expected = std::exp(x * x) * std::erfc(x);
    CHECK(std::abs(ml(0.5, x, 1.0) - expected) < 1e-12);
  }
  CHECK(ml(0.5, 1.0, 1.0) == doctest::Approx(0.427583576155807).epsilon(1e-12));
  CHECK_THROWS_AS(ml(0.0, 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(ml(1.2, 1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(ml(0.5, -1.0, 1.0), ValidationError);
  CHECK_THROWS_AS(ml(0.5, 1.0, -1.0), ValidationError);
}

TEST_CASE("Mittag-Leffler against high-precision oracle") {
  for (const auto& r : kOracle) {
    CAPTURE(r.alpha);
    CAPTURE(r.lambda);
    CAPTURE(r.t);
    CHECK(std::abs(ml(r.alpha, r.lambda, r.t) - r.value) < 1e-10);
    CHECK(std::abs(ml_branch_cut(r.alpha, r.lambda, r.t) - r.value) < 1e-10);
    CHECK(std::abs(ml_contour(r.alpha, r.lambda, r.t) - r.value) < 1e-10);
    if (auto s = ml_series(r.alpha, r.lambda, r.t)) CHECK(std::abs(*s - r.value) < 1e-10);
    CHECK(std::abs(dml_dalpha(r.alpha, r.lambda, r.t) - r.dvalue) < 1e-8);
  }
}

TEST_CASE("Mittag-Leffler evaluation paths agree") {
  for (double alpha : {0.05, 0.2, 0.45, 0.7, 0.95}) {
    for (double lambda : {0.01, 0.3, 1.0, 1.9}) {
      for (double t : {0.01, 0.7, 2.0, 15.0, 300.0}) {
        CAPTURE(alpha);
        CAPTURE(lambda);
        CAPTURE(t);
        const double bc = ml_branch_cut(alpha, lambda, t);
        CHECK(std::abs(ml_contour(alpha, lambda, t) - bc) < 1e-11);
        if (auto s = ml_series(alpha, lambda, t)) CHECK(std::abs(*s - bc) < 1e-11);
        if (auto ds = dml_dalpha_series(alpha, lambda, t))
          CHECK(std::abs(*ds - dml_dalpha_contour(alpha, lambda, t)) < 1e-9);
      }
    }
  }
}

TEST_CASE("Mittag-Leffler monotone and bounded") {
  for (double alpha : {0.1, 0.5, 0.9, 1.0}) {
    for (double t : {0.5, 5.0, 50.0}) {
      double prev = 1.0;
      for (double lambda = 0.0; lambda <= 2.0; lambda += 0.125) {
        const double v = ml(alpha, lambda, t);
        CHECK(v > 0.0);
        CHECK(v <= prev + 1e-14);
        prev = v;
      }
    }
  }
}

TEST_CASE("Mittag-Leffler strictly decreasing in time") {
  for (double alpha : {0.05, 0.3, 0.7, 1.0}) {
    for (double lambda : {0.01, 0.5, 2.0}) {
      double prev = ml(alpha, lambda, 0.0);
      for (double t = 0.25; t <= 100.0; t += 0.25) {
        const double v = ml(alpha, lambda, t);
        CHECK(v > 0.0);
        CHECK(v < prev);
        prev = v;
      }
    }
  }
}

TEST_CASE("alpha derivative matches finite differences") {
  const double h = 1e-5;
  for (double alpha : {0.15, 0.3, 0.5, 0.7, 0.85}) {
    for (double lambda : {0.05, 0.2, 0.8, 1.4, 2.0}) {
      for (double t : {0.3, 1.0, 3.0, 10.0, 40.0}) {
        const double fd = (ml(alpha + h, lambda, t) - ml(alpha - h, lambda, t)) / (2 * h);
        const double d = dml_dalpha(alpha, lambda, t);
        CAPTURE(alpha);
        CAPTURE(lambda);
        CAPTURE(t);
        CHECK(std::abs(d - fd) <= 1e-4 * std::abs(fd) + 1e-9);
      }
    }
  }
  CHECK(dml_dalpha(0.5, 0.0, 2.0) == 0.0);
  // At t = 1 only the digamma part survives.
  double sum = 0.0;
  for (int n = 1; n < 60; ++n)
    sum -= std::pow(-1.0, n) * n * digamma(0.5 * n + 1.0) / std::tgamma(0.5 * n + 1.0);
  CHECK(dml_dalpha(0.5, 1.0, 1.0) == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("large-time expansion") {
  CHECK(asymptotic_order(0.1) == 9);
  CHECK(asymptotic_order(0.3) == 3);
  CHECK(asymptotic_order(0.5) == 1);
  CHECK(asymptotic_order(0.9) == 1);
  CHECK_THROWS_AS(ml_asymptotic(0.5, 1.0, 10.0, 2), ValidationError);
  CHECK_THROWS_AS(ml_asymptotic(0.1, 1.0, 10.0, 10), ValidationError);

  // Leading term equals the closed-form tail tau^{-alpha} / (lambda Gamma(1 - alpha)).
  CHECK(ml_asymptotic(0.3, 2.0, 50.0, 1) ==
        doctest::Approx(std::pow(50.0, -0.3) / (2.0 * fdmv::gamma(0.7))).epsilon(1e-14));

  // Alternating signs track the exact value; the relative error shrinks as tau grows.
  for (double alpha : {0.2, 0.5, 0.8}) {
    const int n = asymptotic_order(alpha);
    double prev_err = 1e300;
    for (double tau : {1e2, 1e4, 1e6}) {
      const double exact = ml(alpha, 1.0, tau);
      const double err = std::abs(ml_asymptotic(alpha, 1.0, tau, n) - exact) / exact;
      CHECK(err < prev_err);
      prev_err = err;
    }
    CHECK(prev_err < 1e-3);
  }

  CHECK(ml_asymptotic_coefficient(0.2, 1.0, 2, AsymptoticSign::alternating) < 0.0);
  CHECK(ml_asymptotic_coefficient(0.2, 1.0, 2, AsymptoticSign::all_positive) > 0.0);
}

TEST_CASE("relative accuracy deep in the tail") {
  for (double alpha : {0.3, 0.8, 0.95}) {
    const double bc = ml_branch_cut(alpha, 1.0, 1e6);
    const double ct = ml_contour(alpha, 1.0, 1e6);
    CAPTURE(alpha);
    CHECK(std::abs(bc - ct) / ct < 1e-8);
  }
}
