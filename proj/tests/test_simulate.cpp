#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracle.hpp"
#include "renewal/analytics.hpp"
#include "renewal/errors.hpp"
#include "renewal/simulate.hpp"

using namespace renewal;
using doctest::Approx;

namespace {

std::function<double(double)> uniform_cdf(double m, double a) {
  return [m, a](double s) { return weibull_closed_form::omega_cdf(m, a, s); };
}

void check_invariants(const RenewalSample& r) {
  REQUIRE(r.tau.size() == r.size());
  REQUIRE(r.t.size() == r.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    REQUIRE(r.t[i] >= 0.0);
    REQUIRE(r.t[i] <= r.tau[i]);
    REQUIRE(r.s[i] >= 0.0);
  }
}

}  // namespace

TEST_CASE("exponential durations: mean wait is a") {
  const auto r = sample_waiting_uniform(DurationDistribution::weibull(1.0, 1.0), 1000000, 11);
  check_invariants(r);
  const auto stats = empirical_waiting_stats(r);
  CHECK(stats.method == Method::monte_carlo);
  REQUIRE(stats.mean_wait_stderr);
  CHECK(std::abs(stats.mean_wait - 1.0) < 3.0 * *stats.mean_wait_stderr);
  CHECK(*stats.mean_wait_stderr == Approx(1e-3).epsilon(0.05));
}

TEST_CASE("m = 0.5 mean wait near 6") {
  const auto r = sample_waiting_uniform(DurationDistribution::weibull(0.5, 1.0), 1000000, 12);
  CHECK(empirical_waiting_stats(r).mean_wait == Approx(6.0).epsilon(0.05));
}

TEST_CASE("plug-in and spread against the closed forms") {
  const auto r = sample_waiting_uniform(DurationDistribution::weibull(0.59, 1.0), 1000000, 13);
  const auto stats = empirical_waiting_stats(r);
  REQUIRE(stats.plugin_mean_wait);
  REQUIRE(stats.mean_wait_stderr);
  CHECK(std::abs(*stats.plugin_mean_wait - weibull_closed_form::mean_wait(0.59, 1.0)) < 3.0 * *stats.mean_wait_stderr);
  CHECK(stats.mean_duration == Approx(weibull_closed_form::mean_duration(0.59, 1.0)).epsilon(0.01));

  const auto r2 = sample_waiting_uniform(DurationDistribution::weibull(2.0, 1.0), 1000000, 14);
  const auto s2 = empirical_waiting_stats(r2);
  CHECK(s2.std_dev == Approx(weibull_closed_form::std_wait(2.0, 1.0)).epsilon(0.01));
  CHECK(s2.std_dev == Approx(0.4105).epsilon(0.05));
}

TEST_CASE("a single draw satisfies the invariants") {
  for (const auto& d : {DurationDistribution::weibull(0.3, 2.0), DurationDistribution::gamma(0.5, 1.0),
                        DurationDistribution::empirical({1.0, 2.0, 5.0})}) {
    const auto r = sample_waiting_uniform(d, 1, 99);
    REQUIRE(r.size() == 1);
    check_invariants(r);
  }
  CHECK_THROWS_AS(sample_waiting_uniform(DurationDistribution::exponential(1.0), 0, 1), DomainError);
}

TEST_CASE("length-biased and timeline schemes agree") {
  for (double m : {0.585, 2.0}) {
    const auto d = DurationDistribution::weibull(m, 1.0);
    const auto lb = sample_waiting_uniform(d, 100000, 21);
    const auto tl = sample_waiting_timeline(d, 100000, 22);
    check_invariants(tl);
    CHECK(tl.scheme == Scheme::timeline);
    CHECK(oracle::ks_two_sample(lb.s, tl.s) < 0.02);
    CHECK(ks_distance(tl.s, uniform_cdf(m, 1.0)) < 0.02);
    CHECK(ks_distance(lb.s, uniform_cdf(m, 1.0)) < 2.0 * 1.36 / std::sqrt(1e5));
  }
}

TEST_CASE("bit-identical across runs and worker counts") {
  const auto d = DurationDistribution::weibull(0.585, 1.0);
  const auto a = sample_waiting_uniform(d, 150000, 5, 1);
  const auto b = sample_waiting_uniform(d, 150000, 5, 3);
  CHECK(a.s == b.s);
  CHECK(a.tau == b.tau);
  CHECK(sample_waiting_uniform(d, 1000, 6).s != a.s);

  const auto o = ObservationDistribution::truncated_exponential(0.5);
  CHECK(sample_waiting_general(d, o, 70000, 8, 1).s == sample_waiting_general(d, o, 70000, 8, 4).s);
  CHECK(sample_waiting_timeline(d, 5000, 3).s == sample_waiting_timeline(d, 5000, 3).s);
}

TEST_CASE("paradox reproduced stochastically") {
  const auto d = DurationDistribution::weibull(0.5, 1.0);
  const auto r = sample_waiting_uniform(d, 200000, 31);
  const auto taus = d.sample(200000, 32);
  const double se_s = oracle::stddev(r.s) / std::sqrt(2e5);
  const double se_t = oracle::stddev(taus) / std::sqrt(2e5);
  CHECK(oracle::mean(r.s) - oracle::mean(taus) > 3.0 * std::hypot(se_s, se_t));
}

TEST_CASE("rejection sampler: limits of the observation law") {
  SUBCASE("wide flat window approaches uniform observation") {
    const auto d = DurationDistribution::weibull(0.585, 1.0);
    const auto o = ObservationDistribution::power_window(0.0, 100.0 * d.mean());
    const auto r = sample_waiting_general(d, o, 100000, 41);
    check_invariants(r);
    CHECK(r.scheme == Scheme::rejection);
    CHECK(r.acceptance_rate < 0.05);
    CHECK(ks_distance(r.s, uniform_cdf(0.585, 1.0)) < 0.02);
  }
  SUBCASE("observer at the start of each duration sees the whole duration") {
    const auto r = sample_waiting_general(DurationDistribution::exponential(1.0),
                                          ObservationDistribution::truncated_exponential(1e3), 100000, 42);
    CHECK(ks_distance(r.s, [](double s) { return -std::expm1(-s); }) < 0.01);
    CHECK(r.acceptance_rate > 0.99);
  }
  SUBCASE("rejection samples follow the general density") {
    const auto d = DurationDistribution::gamma(2.0, 1.0);
    const auto o = ObservationDistribution::truncated_exponential(0.5);
    const auto r = sample_waiting_general(d, o, 100000, 43);
    const WaitingTimeDensity density(d, o);
    CHECK(ks_distance(r.s, [&](double s) { return density.cdf_direct(s); }) < 2.0 * 1.36 / std::sqrt(1e5));
    const auto stats = empirical_waiting_stats(r);
    CHECK(std::isnan(stats.delta[0]));
    REQUIRE(stats.mean_wait_stderr);
    CHECK(std::abs(stats.mean_wait - density.moment(1)) < 4.0 * *stats.mean_wait_stderr);
  }
  SUBCASE("nearly disjoint supports abort") {
    const auto d = DurationDistribution::weibull(2.0, 1e-6);
    const auto o = ObservationDistribution::power_window(4.0, 1e3);
    CHECK_THROWS_AS(sample_waiting_general(d, o, 10, 1), NumericError);
  }
  SUBCASE("improper observation law is rejected") {
    CHECK_THROWS_AS(sample_waiting_general(DurationDistribution::exponential(1.0),
                                           ObservationDistribution::uniform_improper(), 10, 1),
                    DomainError);
  }
}

TEST_CASE("sample statistics on hand-made samples") {
  RenewalSample r;
  r.tau = {2.0, 2.0, 2.0, 2.0};
  r.t = {1.0, 1.0, 1.0, 1.0};
  r.s = {1.0, 1.0, 1.0, 1.0};
  const auto stats = empirical_waiting_stats(r);
  CHECK(stats.mean_wait == 1.0);
  CHECK(stats.std_dev == 0.0);
  CHECK(stats.count == 4);

  RenewalSample bad = r;
  bad.t[2] = 3.0;
  CHECK_THROWS_AS(bad.check(), NumericError);
  RenewalSample one = r;
  one.tau.resize(1);
  one.t.resize(1);
  one.s.resize(1);
  CHECK_THROWS_AS(empirical_waiting_stats(one), DomainError);
}

TEST_CASE("KS distance") {
  const std::vector<double> xs = {1.0, 2.0, 3.0};
  CHECK(ks_distance(xs, [](double) { return 1.0; }) == Approx(1.0));
  const std::vector<double> same = {2.0, 2.0, 2.0, 2.0};
  CHECK(ks_distance(same, [](double x) { return x >= 2.0 ? 1.0 : 0.0; }) <= 1.0 / 4.0);
  // Exact value against the uniform law on [0, 4]: steps at 1, 2, 3 of height 1/3.
  CHECK(ks_distance(xs, [](double x) { return std::clamp(x / 4.0, 0.0, 1.0); }) == Approx(0.25));
  CHECK_THROWS_AS(ks_distance(xs, [](double x) { return x < 2.5 ? 0.9 : 0.1; }), DomainError);
  CHECK_THROWS_AS(ks_distance(xs, [](double) { return 1.5; }), DomainError);
  const std::vector<double> single = {1.0};
  CHECK_THROWS_AS(ks_distance(single, [](double) { return 0.5; }), DomainError);

  const auto d = DurationDistribution::exponential(1.0);
  const auto x = d.sample(100000, 77);
  CHECK(ks_distance(x, [](double s) { return -std::expm1(-s); }) < 2.0 * 1.36 / std::sqrt(1e5));
}
