#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "oracle.hpp"
#include "renewal/errors.hpp"
#include "renewal/special_math.hpp"

using namespace renewal;
using namespace renewal::special;
using doctest::Approx;

TEST_CASE("gamma function values") {
  CHECK(gamma_fn(5.0) == Approx(24.0).epsilon(1e-14));
  CHECK(gamma_fn(0.5) == Approx(std::sqrt(std::numbers::pi)).epsilon(1e-14));
  CHECK(gamma_fn(1.5) == Approx(0.5 * std::sqrt(std::numbers::pi)).epsilon(1e-14));
  CHECK(log_gamma(100.0) == Approx(359.13420536957540).epsilon(1e-13));
  CHECK_THROWS_AS(gamma_fn(0.0), DomainError);
  CHECK_THROWS_AS(gamma_fn(-1.0), DomainError);
  CHECK_THROWS_AS(gamma_fn(200.0), NumericError);
}

TEST_CASE("gamma ratio stays finite where the factors overflow") {
  CHECK(gamma_ratio(4.0, 2.0) == Approx(6.0).epsilon(1e-14));
  // Γ(300)/Γ(299) = 299.
  CHECK(gamma_ratio(300.0, 299.0) == Approx(299.0).epsilon(1e-10));
}

TEST_CASE("regularized incomplete gamma against closed forms") {
  for (double x : {0.01, 0.5, 1.0, 3.0, 10.0, 40.0}) {
    CAPTURE(x);
    CHECK(gamma_p(1.0, x) == Approx(-std::expm1(-x)).epsilon(1e-13));
    CHECK(gamma_p(0.5, x) == Approx(std::erf(std::sqrt(x))).epsilon(1e-13));
    CHECK(gamma_q(0.5, x) == Approx(std::erfc(std::sqrt(x))).epsilon(1e-12));
    // Q(2, x) = (1 + x) e^-x.
    CHECK(gamma_q(2.0, x) == Approx((1.0 + x) * std::exp(-x)).epsilon(1e-12));
  }
  for (double a : {0.3, 1.7, 12.0, 150.0}) {
    for (double x : {0.1, a, 2.0 * a + 3.0}) {
      CHECK(gamma_p(a, x) + gamma_q(a, x) == Approx(1.0).epsilon(1e-14));
    }
  }
  CHECK(gamma_p(2.0, 0.0) == 0.0);
  CHECK(gamma_q(2.0, std::numeric_limits<double>::infinity()) == 0.0);
  CHECK_THROWS_AS(gamma_p(-1.0, 1.0), DomainError);
  CHECK_THROWS_AS(gamma_p(1.0, -1.0), DomainError);
}

TEST_CASE("inverse of the upper incomplete gamma round-trips") {
  for (double a : {0.2, 0.585, 1.0, 2.5, 40.0}) {
    for (double q : {1e-12, 1e-4, 0.1, 0.5, 0.9, 1.0 - 1e-9}) {
      CAPTURE(a);
      CAPTURE(q);
      const double x = gamma_q_inv(a, q);
      CHECK(gamma_q(a, x) == Approx(q).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(gamma_q_inv(1.0, 0.0), DomainError);
  CHECK_THROWS_AS(gamma_q_inv(1.0, 1.5), DomainError);
}

TEST_CASE("finite-interval quadrature handles an integrable endpoint singularity") {
  QuadratureSpec spec;
  spec.endpoint_exponent = 0.5;
  CHECK(integrate_interval([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, spec) == Approx(2.0).epsilon(1e-10));
  spec.endpoint_exponent = 1.0;
  CHECK(integrate_interval([](double x) { return std::sin(x); }, 0.0, std::numbers::pi, spec) ==
        Approx(2.0).epsilon(1e-10));
  CHECK(integrate_interval([](double x) { return x; }, 1.0, 1.0, spec) == 0.0);
}

TEST_CASE("semi-infinite quadrature under both tail maps") {
  for (auto map : {TailTransform::log_map, TailTransform::rational_map}) {
    QuadratureSpec spec;
    spec.tail_transform = map;
    CHECK(integrate_semi_infinite([](double x) { return std::exp(-x); }, 0.0, spec) == Approx(1.0).epsilon(1e-9));
    if (map == TailTransform::rational_map) {
      // Algebraic tails turn log-singular under the exponential map.
      CHECK(integrate_semi_infinite([](double x) { return 1.0 / (1.0 + x * x); }, 0.0, spec) ==
            Approx(std::numbers::pi / 2).epsilon(1e-8));
    }
    // Weibull m = 0.5 density, singular at the origin.
    spec.endpoint_exponent = 0.5;
    spec.abs_tol = 1e-300;
    spec.rel_tol = 1e-10;
    CHECK(integrate_semi_infinite([](double x) { return 0.5 / std::sqrt(x) * std::exp(-std::sqrt(x)); }, 0.0, spec) ==
          Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("quadrature agrees with the fixed-step oracle") {
  auto f = [](double x) { return std::pow(x, 1.3) * std::exp(-x * x / 3.0); };
  const double reference = oracle::simpson(f, 0.0, 30.0, 200000);
  CHECK(integrate_semi_infinite(f, 0.0, {}) == Approx(reference).epsilon(1e-9));
}

TEST_CASE("nested box integral") {
  // ∫_0^∞ ds ∫_s^∞ e^-τ dτ = 1.
  CHECK(integrate_box([](double, double tau) { return std::exp(-tau); }, {}) == Approx(1.0).epsilon(1e-8));
}

TEST_CASE("quadrature failures are reported, not hidden") {
  QuadratureSpec spec;
  spec.max_subdivisions = 3;
  spec.rel_tol = 1e-14;
  spec.abs_tol = 1e-300;
  try {
    integrate_interval([](double x) { return std::sin(50.0 * x) * std::sin(50.0 * x); }, 0.0, 10.0, spec);
    FAIL("expected a QuadratureError");
  } catch (const QuadratureError& e) {
    CHECK(std::isfinite(e.estimate()));
    CHECK(e.error_bound() > 0.0);
  }
  CHECK_THROWS_AS(integrate_interval([](double) { return std::nan(""); }, 0.0, 1.0, {}), NumericError);

  QuadratureSpec bad;
  bad.rel_tol = -1.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = {};
  bad.endpoint_exponent = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = {};
  bad.max_subdivisions = 0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}
