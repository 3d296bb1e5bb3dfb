#include "renewal/fit.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "renewal/errors.hpp"
#include "renewal/rng.hpp"
#include "renewal/simulate.hpp"

namespace renewal {

namespace {

class NeumaierSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    carry_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

void require_positive_samples(std::span<const double> taus, std::size_t minimum, const char* what) {
  if (taus.size() < minimum) {
    throw DomainError(fmt::format("{}: need at least {} durations, got {}", what, minimum, taus.size()));
  }
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!(taus[i] > 0.0) || !std::isfinite(taus[i])) {
      throw DomainError(fmt::format("{}: duration #{} is not positive: {}", what, i, taus[i]));
    }
  }
}

// Weighted sums of the rescaled log-data for a given m. Weights y^m are
// taken relative to the largest so nothing overflows for large m.
struct ScoreTerms {
  double score;       // 1/m + mean ln y - <ln y>_w
  double derivative;  // d score / dm
  double log_mean_power;  // ln mean(y^m)
  double w_log;       // <ln y>_w
  double w_log2;      // <(ln y)^2>_w
};

ScoreTerms score_terms(const std::vector<double>& log_y, double mean_log_y, double m) {
  const double top = m * *std::max_element(log_y.begin(), log_y.end());
  NeumaierSum s0;
  NeumaierSum s1;
  NeumaierSum s2;
  for (double l : log_y) {
    const double w = std::exp(m * l - top);
    s0.add(w);
    s1.add(w * l);
    s2.add(w * l * l);
  }
  const double w_log = s1.value() / s0.value();
  const double w_log2 = s2.value() / s0.value();
  const double n = static_cast<double>(log_y.size());
  return {1.0 / m + mean_log_y - w_log, -1.0 / (m * m) - (w_log2 - w_log * w_log), top + std::log(s0.value() / n),
          w_log, w_log2};
}

}  // namespace

double weibull_lambda(double m, double a) { return std::pow(a, 1.0 / m); }
double weibull_a(double m, double lambda) { return std::pow(lambda, m); }

double sample_raw_moment(std::span<const double> taus, int n) {
  if (taus.empty()) throw DomainError("sample_raw_moment: empty sample");
  if (n < 1) throw DomainError(fmt::format("sample_raw_moment: order must be >= 1, got {}", n));
  NeumaierSum sum;
  for (double tau : taus) sum.add(std::pow(tau, n));
  return sum.value() / static_cast<double>(taus.size());
}

WaitingTimeAnalysis empirical_waiting_stats_from_durations(std::span<const double> taus) {
  require_positive_samples(taus, 2, "empirical_waiting_stats_from_durations");
  const double m1 = sample_raw_moment(taus, 1);
  const double m2 = sample_raw_moment(taus, 2);
  const double m3 = sample_raw_moment(taus, 3);

  WaitingTimeAnalysis out;
  out.method = Method::monte_carlo;
  out.count = taus.size();
  out.mean_duration = m1;
  out.mean_wait = mean_wait_from_moments(m1, m2);
  out.second_moment = m3 / (3.0 * m1);
  out.plugin_mean_wait = out.mean_wait;
  const double radicand = 4.0 * m3 * m1 - 3.0 * m2 * m2;
  if (radicand < 0.0) {
    out.std_dev = std::numeric_limits<double>::quiet_NaN();
    out.diagnostics.push_back(fmt::format(
        "sample moments give a negative variance radicand ({:.3e}); the duration sample is too heavy-tailed "
        "for its third moment to be estimated",
        radicand));
  } else {
    out.std_dev = std::sqrt(radicand / (12.0 * m1 * m1));
  }
  out.paradox = out.mean_wait > out.mean_duration;
  return out;
}

FitResult fit_weibull(std::span<const double> taus) {
  require_positive_samples(taus, kMinFitSamples, "fit_weibull");
  const auto [lo_it, hi_it] = std::minmax_element(taus.begin(), taus.end());
  if (*lo_it == *hi_it) {
    throw DomainError("fit_weibull: all durations are equal, the shape m is unidentifiable (m -> infinity)");
  }
  const double n = static_cast<double>(taus.size());

  // Rescale by the geometric mean: ln y has zero mean.
  NeumaierSum log_sum;
  for (double tau : taus) log_sum.add(std::log(tau));
  const double log_g = log_sum.value() / n;
  std::vector<double> log_y;
  log_y.reserve(taus.size());
  for (double tau : taus) log_y.push_back(std::log(tau) - log_g);
  NeumaierSum centred;
  for (double l : log_y) centred.add(l);
  const double mean_log_y = centred.value() / n;

  // The score decreases in m, from +inf at 0 to mean ln y - max ln y < 0.
  double lo = 1.0;
  double hi = 1.0;
  int iterations = 0;
  while (score_terms(log_y, mean_log_y, lo).score < 0.0) {
    hi = lo;
    lo *= 0.5;
    if (++iterations > kMaxFitIterations) throw NumericError("fit_weibull: no lower bracket for m");
  }
  while (score_terms(log_y, mean_log_y, hi).score > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++iterations > kMaxFitIterations) throw NumericError("fit_weibull: no upper bracket for m");
  }

  double m = 0.5 * (lo + hi);
  ScoreTerms terms = score_terms(log_y, mean_log_y, m);
  bool converged = false;
  for (; iterations <= kMaxFitIterations; ++iterations) {
    if (std::abs(terms.score) < kScoreTolerance) {
      converged = true;
      break;
    }
    if (terms.score > 0.0) {
      lo = m;
    } else {
      hi = m;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
      converged = true;
      break;
    }
    double next = m - terms.score / terms.derivative;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    m = next;
    terms = score_terms(log_y, mean_log_y, m);
  }
  if (!converged) {
    throw NumericError(fmt::format("fit_weibull: score did not reach {:g} in {} iterations (bracket [{:.17g}, {:.17g}])",
                                   kScoreTolerance, kMaxFitIterations, lo, hi));
  }

  FitResult out;
  out.n = taus.size();
  out.m_hat = m;
  out.iterations = iterations;
  // a = mean(x^m) = g^m mean(y^m).
  const double log_a = m * log_g + terms.log_mean_power;
  out.a_hat = std::exp(log_a);
  if (!std::isfinite(out.a_hat) || !(out.a_hat > 0.0)) {
    throw NumericError(fmt::format("fit_weibull: a = exp({}) is not representable", log_a));
  }
  // Σ x^m / a = N at the optimum.
  out.log_likelihood = n * std::log(m) - n * log_a + (m - 1.0) * log_sum.value() - n;

  // Observed information in (m, a), with <.>_w the y^m-weighted mean and ln x = ln g + ln y.
  const double a = out.a_hat;
  const double w_ln_x = log_g + terms.w_log;
  const double w_ln_x2 = terms.w_log2 + 2.0 * log_g * terms.w_log + log_g * log_g;
  const double i_mm = n / (m * m) + n * w_ln_x2;
  const double i_ma = -n * w_ln_x / a;
  const double i_aa = n / (a * a);
  const double det = i_mm * i_aa - i_ma * i_ma;
  if (det > 0.0) {
    out.m_stderr = std::sqrt(i_aa / det);
    out.a_stderr = std::sqrt(i_mm / det);
  } else {
    out.m_stderr = out.a_stderr = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

BootstrapErrors bootstrap_weibull(std::span<const double> taus, std::size_t replicates, std::uint64_t seed,
                                  unsigned workers) {
  require_positive_samples(taus, kMinFitSamples, "bootstrap_weibull");
  if (replicates < 2) throw DomainError("bootstrap_weibull: need at least 2 replicates");
  std::vector<double> ms(replicates);
  std::vector<double> as(replicates);
  for_each_shard(replicates, workers, [&](std::size_t i) {
    Rng rng(seed, stream_id(StreamRole::bootstrap, i));
    std::vector<double> resample(taus.size());
    for (double& x : resample) x = taus[rng.index(taus.size())];
    try {
      const FitResult f = fit_weibull(resample);
      ms[i] = f.m_hat;
      as[i] = f.a_hat;
    } catch (const DomainError&) {
      ms[i] = as[i] = std::numeric_limits<double>::quiet_NaN();
    }
  });
  auto spread = [](const std::vector<double>& v) {
    double mean = 0.0;
    std::size_t k = 0;
    for (double x : v) {
      if (std::isfinite(x)) {
        mean += x;
        ++k;
      }
    }
    if (k < 2) return std::numeric_limits<double>::quiet_NaN();
    mean /= static_cast<double>(k);
    double ss = 0.0;
    for (double x : v) {
      if (std::isfinite(x)) ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(k - 1));
  };
  return {spread(ms), spread(as), replicates};
}

GoodnessOfFit goodness_of_fit(std::span<const double> taus, const FitResult& fit) {
  if (!(fit.m_hat > 0.0) || !(fit.a_hat > 0.0)) throw DomainError("goodness_of_fit: invalid fit");
  const DurationDistribution d = fit.distribution();
  const double ks = ks_distance(taus, [&](double x) { return x <= 0.0 ? 0.0 : d.cdf(x); });
  const double critical = 1.63 / std::sqrt(static_cast<double>(taus.size()));
  return {ks, critical, ks < critical};
}

}  // namespace renewal
