#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "oracle.hpp"
#include "renewal/distributions.hpp"
#include "renewal/errors.hpp"

using namespace renewal;
using doctest::Approx;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("Weibull uses the a = lambda^m parameterization") {
  const auto d = DurationDistribution::weibull(0.5, 1.0);
  CHECK(d.pdf(1.0) == Approx(0.5 * std::exp(-1.0)).epsilon(1e-15));
  CHECK(d.survival(4.0) == Approx(std::exp(-2.0)).epsilon(1e-15));
  CHECK(d.cdf(4.0) + d.survival(4.0) == Approx(1.0).epsilon(1e-15));

  const auto conventional = DurationDistribution::weibull_conventional(2.0, 3.0);
  const auto& w = std::get<Weibull>(conventional.variant());
  CHECK(w.a == Approx(9.0).epsilon(1e-15));
}

TEST_CASE("raw moments agree with quadrature of the density") {
  for (double m : {0.5, 0.585, 1.0, 2.0}) {
    for (double a : {0.5, 1.0, 4.0}) {
      const auto d = DurationDistribution::weibull(m, a);
      for (int n = 1; n <= 3; ++n) {
        CAPTURE(m);
        CAPTURE(a);
        CAPTURE(n);
        CHECK(d.raw_moment(n) == Approx(oracle::weibull_moment(m, a, n)).epsilon(1e-8));
      }
    }
  }
  // E(τ) = a^(1/m) Γ(1 + 1/m): m = 0.5 gives 2.
  CHECK(DurationDistribution::weibull(0.5, 1.0).mean() == Approx(2.0).epsilon(1e-14));
  CHECK(DurationDistribution::gamma(3.0, 2.0).raw_moment(2) == Approx(3.0 * 4.0 * 4.0).epsilon(1e-14));
  CHECK(DurationDistribution::exponential(2.0).raw_moment(3) == Approx(48.0).epsilon(1e-14));
}

TEST_CASE("huge moments overflow loudly") {
  CHECK_THROWS_AS(DurationDistribution::weibull(0.01, 1.0).raw_moment(3), NumericError);
}

TEST_CASE("inverse survival round-trips for every parametric law") {
  const DurationDistribution laws[] = {DurationDistribution::weibull(0.585, 1.3), DurationDistribution::exponential(2.0),
                                       DurationDistribution::gamma(0.4, 1.5), DurationDistribution::gamma(7.0, 0.5)};
  for (const auto& d : laws) {
    for (double q : {1e-10, 0.01, 0.5, 0.99}) {
      CAPTURE(d.describe());
      CAPTURE(q);
      CHECK(d.survival(d.inverse_survival(q)) == Approx(q).epsilon(1e-9));
    }
  }
}

TEST_CASE("partial first moment matches quadrature") {
  const auto d = DurationDistribution::weibull(0.585, 1.0);
  const double direct = oracle::power_simpson([&](double t) { return t * oracle::weibull_pdf(0.585, 1.0, t); }, 4.0,
                                              oracle::weibull_cutoff(0.585, 1.0), 400000);
  CHECK(d.partial_first_moment(0.0, kInf) == Approx(direct).epsilon(1e-8));
  const double piece = oracle::simpson([&](double t) { return t * oracle::weibull_pdf(0.585, 1.0, t); }, 1.0, 3.0, 20000);
  CHECK(d.partial_first_moment(1.0, 3.0) == Approx(piece).epsilon(1e-10));
  const auto g = DurationDistribution::gamma(2.0, 1.0);
  CHECK(g.partial_first_moment(0.0, 1.0) == Approx(2.0 - 5.0 * std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("sampling is deterministic and independent of the worker count") {
  const auto d = DurationDistribution::weibull(0.585, 1.0);
  const auto a = d.sample(200000, 42, 1);
  const auto b = d.sample(200000, 42, 4);
  const auto c = d.sample(200000, 43, 1);
  CHECK(a == b);
  CHECK(a != c);
  const double mean = oracle::mean(a);
  const double se = oracle::stddev(a) / std::sqrt(static_cast<double>(a.size()));
  CHECK(std::abs(mean - d.mean()) < 4.0 * se);
}

TEST_CASE("gamma sampler reproduces its mean, including k < 1") {
  for (double k : {0.4, 3.0}) {
    const auto d = DurationDistribution::gamma(k, 2.0);
    const auto x = d.sample(200000, 5);
    const double se = oracle::stddev(x) / std::sqrt(static_cast<double>(x.size()));
    CHECK(std::abs(oracle::mean(x) - 2.0 * k) < 4.0 * se);
  }
}

TEST_CASE("empirical durations") {
  const auto d = DurationDistribution::empirical({3.0, 1.0, 2.0});
  CHECK(d.is_empirical());
  CHECK(d.empirical_samples() == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(d.raw_moment(2) == Approx(14.0 / 3.0));
  CHECK(d.survival(2.0) == Approx(1.0 / 3.0));
  CHECK(d.cdf(2.0) == Approx(2.0 / 3.0));
  CHECK_THROWS_AS(d.pdf(1.0), DomainError);
  CHECK_THROWS_AS(DurationDistribution::empirical({1.0}), DomainError);
  CHECK_THROWS_AS(DurationDistribution::empirical({1.0, 0.0}), DomainError);
}

TEST_CASE("parameter validation names the violated invariant") {
  CHECK_THROWS_AS(DurationDistribution::weibull(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(DurationDistribution::weibull(1.0, -2.0), DomainError);
  CHECK_THROWS_AS(DurationDistribution::exponential(std::nan("")), DomainError);
  CHECK_THROWS_AS(ObservationDistribution::power_window(-0.5, 1.0), DomainError);
  CHECK_THROWS_AS(ObservationDistribution::truncated_exponential(0.0), DomainError);
  try {
    DurationDistribution::weibull(-1.0, 1.0);
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()).find("shape") != std::string::npos);
  }
}

TEST_CASE("observation laws are normalized and expose their jumps") {
  const auto texp = ObservationDistribution::truncated_exponential(2.0);
  CHECK(texp.partial_moment(0, 50.0) == Approx(1.0).epsilon(1e-14));
  CHECK(texp.partial_moment(1, 50.0) == Approx(0.5).epsilon(1e-12));
  CHECK(texp.jumps().empty());

  const auto window = ObservationDistribution::power_window(0.5, 2.0);
  CHECK(window.cdf(2.0) == Approx(1.0));
  CHECK(window.partial_moment(0, 2.0) == Approx(1.0).epsilon(1e-14));
  const double m2 = oracle::simpson([&](double t) { return t * t * window.density(t); }, 0.0, 2.0, 20000);
  CHECK(window.partial_moment(2, 2.0) == Approx(m2).epsilon(1e-7));
  CHECK(window.partial_moment(2, 2.0) == Approx(1.5 * 4.0 / 3.5).epsilon(1e-14));
  REQUIRE(window.jumps().size() == 1);
  CHECK(window.jumps()[0].at == 2.0);
  CHECK(window.jumps()[0].size == Approx(-1.5 / 2.0));
  CHECK(window.density(2.5) == 0.0);

  const auto flat = ObservationDistribution::power_window(0.0, 4.0);
  CHECK(flat.density(1.0) == Approx(0.25));
  CHECK(flat.derivative(1.0) == 0.0);

  const auto improper = ObservationDistribution::uniform_improper();
  CHECK(improper.density(1e6) == 1.0);
  CHECK_FALSE(improper.is_proper());
  CHECK_THROWS_AS(improper.cdf(1.0), DomainError);
  CHECK_THROWS_AS(improper.sample(3, 1), DomainError);
}

TEST_CASE("histogram observation law from offsets") {
  std::vector<double> offsets;
  for (int i = 0; i < 10000; ++i) offsets.push_back(3.0 * (i + 0.5) / 10000.0);
  const auto o = ObservationDistribution::empirical(offsets);
  CHECK(o.cdf(o.support_end()) == Approx(1.0).epsilon(1e-12));
  CHECK(o.cdf(1.5) == Approx(0.5).epsilon(1e-2));
  CHECK(o.density(1.0) == Approx(1.0 / 3.0).epsilon(2e-2));
  CHECK(o.partial_moment(0, o.support_end()) == Approx(1.0).epsilon(1e-12));
  const auto draws = o.sample(10000, 3);
  for (double t : draws) CHECK((t >= 0.0 && t <= o.support_end()));
}

TEST_CASE("observation sampling matches the law") {
  const auto o = ObservationDistribution::power_window(1.0, 3.0);
  const auto x = o.sample(100000, 9);
  // E(t) = (p + 1) T / (p + 2) = 2.
  const double se = oracle::stddev(x) / std::sqrt(static_cast<double>(x.size()));
  CHECK(std::abs(oracle::mean(x) - 2.0) < 4.0 * se);
  CHECK(o.sample(1000, 9, 1) == o.sample(1000, 9, 3));
}
