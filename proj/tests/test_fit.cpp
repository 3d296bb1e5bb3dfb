#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "oracle.hpp"
#include "renewal/analytics.hpp"
#include "renewal/errors.hpp"
#include "renewal/fit.hpp"
#include "renewal/ratefilter.hpp"
#include "renewal/simulate.hpp"

using namespace renewal;
using doctest::Approx;

namespace {

double log_likelihood(std::span<const double> taus, double m, double a) {
  double l = 0.0;
  for (double t : taus) l += std::log(m / a) + (m - 1.0) * std::log(t) - std::pow(t, m) / a;
  return l;
}

}  // namespace

TEST_CASE("sample raw moments") {
  const std::vector<double> x = {1.0, 2.0, 3.0};
  CHECK(sample_raw_moment(x, 1) == Approx(2.0).epsilon(1e-15));
  CHECK(sample_raw_moment(x, 2) == Approx(14.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(sample_raw_moment(std::vector<double>{}, 1), DomainError);
  CHECK_THROWS_AS(sample_raw_moment(x, 0), DomainError);

  const auto taus = DurationDistribution::exponential(1.0).sample(1000000, 3);
  const double m2 = sample_raw_moment(taus, 2);
  std::vector<double> sq(taus.size());
  std::transform(taus.begin(), taus.end(), sq.begin(), [](double t) { return t * t; });
  const double se = oracle::stddev(sq) / std::sqrt(1e6);
  CHECK(std::abs(m2 - 2.0) < 3.0 * se);
}

TEST_CASE("raw moments: permutation and scaling") {
  auto taus = DurationDistribution::weibull(0.7, 1.0).sample(5000, 8);
  const double m3 = sample_raw_moment(taus, 3);
  std::mt19937_64 gen(1);
  std::shuffle(taus.begin(), taus.end(), gen);
  CHECK(sample_raw_moment(taus, 3) == Approx(m3).epsilon(1e-14));
  std::vector<double> scaled(taus);
  for (double& t : scaled) t *= 2.5;
  CHECK(sample_raw_moment(scaled, 3) == Approx(std::pow(2.5, 3) * m3).epsilon(1e-13));
}

TEST_CASE("waiting statistics from duration samples") {
  const std::vector<double> equal(50, 3.0);
  const auto s = empirical_waiting_stats_from_durations(equal);
  CHECK(s.mean_wait == Approx(1.5).epsilon(1e-14));
  CHECK(s.std_dev == Approx(3.0 / std::sqrt(12.0)).epsilon(1e-7));
  CHECK(s.method == Method::monte_carlo);
  CHECK(s.diagnostics.empty());

  const auto taus = DurationDistribution::weibull(0.585, 1.0).sample(1000000, 4);
  const auto w = empirical_waiting_stats_from_durations(taus);
  CHECK(w.mean_wait == Approx(weibull_closed_form::mean_wait(0.585, 1.0)).epsilon(0.03));
  CHECK(w.paradox);
  CHECK_THROWS_AS(empirical_waiting_stats_from_durations(std::vector<double>{1.0}), DomainError);
  CHECK_THROWS_AS(empirical_waiting_stats_from_durations(std::vector<double>{1.0, -1.0}), DomainError);
}

TEST_CASE("maximum likelihood bands") {
  const auto weibull = DurationDistribution::weibull(0.585, 1.0).sample(100000, 21);
  const auto f = fit_weibull(weibull);
  CHECK(f.m_hat >= 0.57);
  CHECK(f.m_hat <= 0.60);
  CHECK(f.n == 100000);

  const auto expo = DurationDistribution::exponential(2.0).sample(100000, 22);
  const auto g = fit_weibull(expo);
  CHECK(g.m_hat >= 0.98);
  CHECK(g.m_hat <= 1.02);
  CHECK(weibull_lambda(g.m_hat, g.a_hat) == Approx(2.0).epsilon(0.02));
  CHECK(weibull_a(2.0, weibull_lambda(2.0, 9.0)) == Approx(9.0).epsilon(1e-15));
}

TEST_CASE("fit errors") {
  CHECK_THROWS_AS(fit_weibull(std::vector<double>(20, 1.0)), DomainError);
  CHECK_THROWS_AS(fit_weibull(std::vector<double>{1, 2, 3}), DomainError);
  std::vector<double> bad(20, 1.0);
  bad[3] = 0.0;
  bad[4] = 2.0;
  CHECK_THROWS_AS(fit_weibull(bad), DomainError);
}

TEST_CASE("MLE is a maximum of the likelihood") {
  const auto taus = DurationDistribution::weibull(1.7, 3.0).sample(2000, 5);
  const auto f = fit_weibull(taus);
  const double best = log_likelihood(taus, f.m_hat, f.a_hat);
  CHECK(f.log_likelihood == Approx(best).epsilon(1e-10));
  for (double dm : {-1e-3, 1e-3}) {
    for (double da : {-1e-3, 0.0, 1e-3}) {
      CHECK(log_likelihood(taus, f.m_hat * (1 + dm), f.a_hat * (1 + da)) < best);
    }
  }
  CHECK(log_likelihood(taus, f.m_hat, f.a_hat * 1.001) < best);
  // a = mean of τ^m at the optimum.
  double sum = 0.0;
  for (double t : taus) sum += std::pow(t, f.m_hat);
  CHECK(f.a_hat == Approx(sum / 2000.0).epsilon(1e-12));
}

TEST_CASE("round trip over a parameter grid") {
  std::uint64_t seed = 100;
  for (double m : {0.585, 1.0, 2.0}) {
    for (double a : {0.5, 1.0, 4.0}) {
      CAPTURE(m);
      CAPTURE(a);
      const auto taus = DurationDistribution::weibull(m, a).sample(20000, ++seed);
      const auto f = fit_weibull(taus);
      CHECK(std::abs(f.m_hat - m) < 3.0 * f.m_stderr);
      CHECK(std::abs(f.a_hat - a) < 3.0 * f.a_stderr);
      CHECK(f.m_stderr > 0.0);
      CHECK(f.a_stderr > 0.0);
    }
  }
}

TEST_CASE("bootstrap spread matches the observed information") {
  const auto taus = DurationDistribution::weibull(0.585, 1.0).sample(2000, 9);
  const auto f = fit_weibull(taus);
  const auto b = bootstrap_weibull(taus, 200, 10);
  CHECK(b.replicates == 200);
  CHECK(b.m_stderr == Approx(f.m_stderr).epsilon(0.25));
  CHECK(b.a_stderr == Approx(f.a_stderr).epsilon(0.25));
  const auto c = bootstrap_weibull(taus, 40, 10, 3);
  const auto d = bootstrap_weibull(taus, 40, 10, 1);
  CHECK(c.m_stderr == d.m_stderr);
}

TEST_CASE("goodness of fit: calibration and power") {
  int passes = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto taus = DurationDistribution::weibull(0.585, 1.0).sample(10000, 1000 + seed);
    passes += goodness_of_fit(taus, fit_weibull(taus)).pass ? 1 : 0;
  }
  CHECK(passes >= 95);

  const auto taus = DurationDistribution::weibull(0.585, 1.0).sample(10000, 7);
  FitResult wrong = fit_weibull(taus);
  wrong.m_hat = 2.0 * 0.585;
  const auto gof = goodness_of_fit(taus, wrong);
  CHECK_FALSE(gof.pass);
  CHECK(gof.critical == Approx(1.63 / 100.0));

  const std::vector<double> small = {0.1, 0.5, 0.7, 1.2, 1.3, 2.0, 2.2, 3.1, 4.0, 6.0};
  const auto tiny = goodness_of_fit(small, fit_weibull(small));
  CHECK(tiny.ks >= 0.0);
  CHECK(tiny.ks <= 1.0);
}

TEST_CASE("synthetic pipeline closes") {
  const auto ticks = synth_ticks(0.03, 1.0, 200000, 17, 100.0);
  const auto durations = durations_of(first_exit_filter(ticks, 0.1));
  const auto f = fit_weibull(durations);
  const auto model = f.distribution();
  const double w = mean_waiting_uniform(model);
  const double sigma = std_waiting_uniform(model);
  const auto mc = empirical_waiting_stats(sample_waiting_uniform(model, 100000, 18));
  CHECK(mc.mean_wait == Approx(w).epsilon(0.05));
  CHECK(mc.std_dev == Approx(sigma).epsilon(0.05));
}
