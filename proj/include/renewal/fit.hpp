#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "renewal/analytics.hpp"
#include "renewal/distributions.hpp"

namespace renewal {

/// Weibull MLE in the (m, a) parameterization, a = λ^m.
struct FitResult {
  double m_hat = 0.0;
  double a_hat = 0.0;
  double log_likelihood = 0.0;
  std::size_t n = 0;
  double m_stderr = 0.0;  // observed information
  double a_stderr = 0.0;
  int iterations = 0;

  DurationDistribution distribution() const { return DurationDistribution::weibull(m_hat, a_hat); }
};

/// Conventional scale λ = a^(1/m) and back.
double weibull_lambda(double m, double a);
double weibull_a(double m, double lambda);

/// Mean of τ_i^n with compensated summation.
double sample_raw_moment(std::span<const double> taus, int n);

/// w and σ from the duration sample alone, E(τ^n) replaced by sample means.
/// A negative σ radicand is left as NaN with a diagnostic instead of clamped.
WaitingTimeAnalysis empirical_waiting_stats_from_durations(std::span<const double> taus);

/// Profile-likelihood score for m is solved by bracketing then safeguarded
/// Newton on data rescaled by its geometric mean. Needs >= 10 positive samples.
/// All-equal samples throw DomainError (m unidentifiable); no convergence in
/// 200 iterations throws NumericError naming the bracket.
FitResult fit_weibull(std::span<const double> taus);

inline constexpr std::size_t kMinFitSamples = 10;
inline constexpr double kScoreTolerance = 1e-10;
inline constexpr int kMaxFitIterations = 200;

/// Bootstrap standard errors of (m, a): resample with
/// replacement, refit, take the spread. Replicate i draws from its own stream.
struct BootstrapErrors {
  double m_stderr;
  double a_stderr;
  std::size_t replicates;
};
BootstrapErrors bootstrap_weibull(std::span<const double> taus, std::size_t replicates, std::uint64_t seed,
                                  unsigned workers = 1);

/// KS distance against the fitted CDF and the approximate 1% critical value
/// 1.63/sqrt(N). The critical value ignores that (m, a) were estimated from
/// the same data, so the test is conservative; with N below ~50 it has little
/// power.
struct GoodnessOfFit {
  double ks;
  double critical;
  bool pass;
};
GoodnessOfFit goodness_of_fit(std::span<const double> taus, const FitResult& fit);

}  // namespace renewal
