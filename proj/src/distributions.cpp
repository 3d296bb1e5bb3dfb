#include "renewal/distributions.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "renewal/errors.hpp"
#include "renewal/rng.hpp"
#include "renewal/special_math.hpp"

namespace renewal {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError(fmt::format("{} must be positive and finite, got {}", what, value));
  }
}

void require_time(double t, const char* what) {
  if (!(t >= 0.0)) throw DomainError(fmt::format("{}: time must be non-negative, got {}", what, t));
}

double checked_exp_moment(double log_value, const char* what) {
  if (log_value > std::log(std::numeric_limits<double>::max())) {
    throw NumericError(fmt::format("{}: moment overflows a double", what));
  }
  return std::exp(log_value);
}

// Marsaglia-Tsang, with the u^(1/k) boost for k < 1.
double gamma_variate(Rng& rng, double k) {
  if (k < 1.0) return gamma_variate(rng, k + 1.0) * std::pow(rng.open_uniform(), 1.0 / k);
  const double d = k - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.open_uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

// Partial first moment of Gamma(k, θ) over [lo, hi]: kθ [P(k+1, hi/θ) - P(k+1, lo/θ)],
// taken from the upper tail to avoid cancellation far out.
double gamma_partial_mean(double k, double theta, double lo, double hi) {
  const double q_lo = special::gamma_q(k + 1.0, lo / theta);
  const double q_hi = std::isinf(hi) ? 0.0 : special::gamma_q(k + 1.0, hi / theta);
  return k * theta * (q_lo - q_hi);
}

}  // namespace

// DurationDistribution ------------------------------------------------------------

DurationDistribution DurationDistribution::weibull(double m, double a) {
  require_positive(m, "Weibull shape m");
  require_positive(a, "Weibull parameter a");
  return DurationDistribution(Weibull{m, a});
}

DurationDistribution DurationDistribution::weibull_conventional(double shape, double lambda) {
  require_positive(shape, "Weibull shape");
  require_positive(lambda, "Weibull scale lambda");
  return weibull(shape, std::pow(lambda, shape));
}

DurationDistribution DurationDistribution::exponential(double mean) {
  require_positive(mean, "Exponential mean");
  return DurationDistribution(Exponential{mean});
}

DurationDistribution DurationDistribution::gamma(double k, double theta) {
  require_positive(k, "Gamma shape k");
  require_positive(theta, "Gamma scale theta");
  return DurationDistribution(GammaLaw{k, theta});
}

DurationDistribution DurationDistribution::empirical(std::vector<double> samples) {
  if (samples.size() < 2) throw DomainError("Empirical duration law needs at least 2 samples");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(samples[i] > 0.0) || !std::isfinite(samples[i])) {
      throw DomainError(fmt::format("Empirical duration #{} is not positive: {}", i, samples[i]));
    }
  }
  std::sort(samples.begin(), samples.end());
  return DurationDistribution(
      EmpiricalDurations{std::make_shared<const std::vector<double>>(std::move(samples))});
}

const std::vector<double>& DurationDistribution::empirical_samples() const {
  const auto* e = std::get_if<EmpiricalDurations>(&law_);
  if (e == nullptr) throw DomainError("not an empirical duration law");
  return *e->sorted;
}

double DurationDistribution::pdf(double tau) const {
  require_time(tau, "pdf");
  return std::visit(
      overloaded{
          [&](const Weibull& w) {
            if (tau == 0.0) {
              if (w.m < 1.0) return kInf;
              return w.m == 1.0 ? 1.0 / w.a : 0.0;
            }
            return (w.m / w.a) * std::pow(tau, w.m - 1.0) * std::exp(-std::pow(tau, w.m) / w.a);
          },
          [&](const Exponential& e) { return std::exp(-tau / e.mean) / e.mean; },
          [&](const GammaLaw& g) {
            if (tau == 0.0) {
              if (g.k < 1.0) return kInf;
              return g.k == 1.0 ? 1.0 / g.theta : 0.0;
            }
            const double x = tau / g.theta;
            return std::exp((g.k - 1.0) * std::log(x) - x - std::lgamma(g.k)) / g.theta;
          },
          [&](const EmpiricalDurations&) -> double {
            throw DomainError("empirical duration law has no density");
          }},
      law_);
}

double DurationDistribution::survival(double s) const {
  require_time(s, "survival");
  return std::visit(overloaded{[&](const Weibull& w) { return std::exp(-std::pow(s, w.m) / w.a); },
                               [&](const Exponential& e) { return std::exp(-s / e.mean); },
                               [&](const GammaLaw& g) { return special::gamma_q(g.k, s / g.theta); },
                               [&](const EmpiricalDurations& e) {
                                 const auto& v = *e.sorted;
                                 const auto above = v.end() - std::upper_bound(v.begin(), v.end(), s);
                                 return static_cast<double>(above) / static_cast<double>(v.size());
                               }},
                    law_);
}

double DurationDistribution::cdf(double tau) const {
  require_time(tau, "cdf");
  return std::visit(overloaded{[&](const Weibull& w) { return -std::expm1(-std::pow(tau, w.m) / w.a); },
                               [&](const Exponential& e) { return -std::expm1(-tau / e.mean); },
                               [&](const GammaLaw& g) { return special::gamma_p(g.k, tau / g.theta); },
                               [&](const EmpiricalDurations&) { return 1.0 - survival(tau); }},
                    law_);
}

double DurationDistribution::inverse_survival(double q) const {
  if (!(q > 0.0 && q <= 1.0)) throw DomainError(fmt::format("inverse_survival: q = {} outside (0, 1]", q));
  return std::visit(
      overloaded{[&](const Weibull& w) { return std::pow(-w.a * std::log(q), 1.0 / w.m); },
                 [&](const Exponential& e) { return -e.mean * std::log(q); },
                 [&](const GammaLaw& g) { return g.theta * special::gamma_q_inv(g.k, q); },
                 [&](const EmpiricalDurations& e) {
                   const auto& v = *e.sorted;
                   const auto n = static_cast<double>(v.size());
                   // survival(v[i]) = (n - 1 - i) / n for distinct values
                   const auto i = static_cast<std::size_t>(std::ceil(n * (1.0 - q) - 1e-9));
                   return i == 0 ? 0.0 : v[std::min(i, v.size()) - 1];
                 }},
      law_);
}

double DurationDistribution::raw_moment(int n) const {
  if (n < 1) throw DomainError(fmt::format("raw_moment: order must be >= 1, got {}", n));
  return std::visit(
      overloaded{
          [&](const Weibull& w) {
            const double order = n / w.m;
            if (1.0 + order < 171.0) {
              const double value = std::pow(w.a, order) * std::tgamma(1.0 + order);
              if (std::isfinite(value)) return value;
            }
            return checked_exp_moment(order * std::log(w.a) + std::lgamma(1.0 + order), "raw_moment");
          },
          [&](const Exponential& e) {
            double value = 1.0;
            for (int i = 1; i <= n; ++i) value *= i * e.mean;
            if (!std::isfinite(value)) throw NumericError("raw_moment: moment overflows a double");
            return value;
          },
          [&](const GammaLaw& g) {
            double value = 1.0;
            for (int i = 0; i < n; ++i) value *= (g.k + i) * g.theta;
            if (!std::isfinite(value)) throw NumericError("raw_moment: moment overflows a double");
            return value;
          },
          [&](const EmpiricalDurations& e) {
            // Neumaier-compensated mean of τ_i^n.
            double sum = 0.0;
            double comp = 0.0;
            for (double tau : *e.sorted) {
              const double term = std::pow(tau, n);
              const double t = sum + term;
              comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
              sum = t;
            }
            const double value = (sum + comp) / static_cast<double>(e.sorted->size());
            if (!std::isfinite(value)) throw NumericError("raw_moment: moment overflows a double");
            return value;
          }},
      law_);
}

double DurationDistribution::partial_first_moment(double lo, double hi) const {
  require_time(lo, "partial_first_moment");
  if (!(hi >= lo)) throw DomainError("partial_first_moment: requires lo <= hi");
  return std::visit(
      overloaded{
          [&](const Weibull& w) {
            // u = τ^m / a turns τ dP_W into a^(1/m) Γ(1 + 1/m) times a Gamma(1 + 1/m) law.
            const double shape = 1.0 + 1.0 / w.m;
            const double u_lo = std::pow(lo, w.m) / w.a;
            const double u_hi = std::isinf(hi) ? kInf : std::pow(hi, w.m) / w.a;
            const double q_lo = special::gamma_q(shape, u_lo);
            const double q_hi = std::isinf(u_hi) ? 0.0 : special::gamma_q(shape, u_hi);
            return raw_moment(1) * (q_lo - q_hi);
          },
          [&](const Exponential& e) { return gamma_partial_mean(1.0, e.mean, lo, hi); },
          [&](const GammaLaw& g) { return gamma_partial_mean(g.k, g.theta, lo, hi); },
          [&](const EmpiricalDurations& e) {
            double sum = 0.0;
            for (double tau : *e.sorted) {
              if (tau > lo && tau <= hi) sum += tau;
            }
            return sum / static_cast<double>(e.sorted->size());
          }},
      law_);
}

double DurationDistribution::draw(Rng& rng) const {
  return std::visit(overloaded{[&](const Weibull& w) { return std::pow(-w.a * std::log(rng.open_uniform()), 1.0 / w.m); },
                               [&](const Exponential& e) { return -e.mean * std::log(rng.open_uniform()); },
                               [&](const GammaLaw& g) { return g.theta * gamma_variate(rng, g.k); },
                               [&](const EmpiricalDurations& e) {
                                 const auto& v = *e.sorted;
                                 return v[rng.index(v.size())];
                               }},
                    law_);
}

std::vector<double> DurationDistribution::sample(std::size_t count, std::uint64_t seed,
                                                 unsigned workers) const {
  std::vector<double> out(count);
  fill_sharded(out, seed, StreamRole::durations, workers, [&](Rng& rng, std::span<double> chunk) {
    for (double& x : chunk) x = draw(rng);
  });
  return out;
}

double DurationDistribution::endpoint_exponent() const {
  return std::visit(overloaded{[](const Weibull& w) { return std::min(1.0, w.m); },
                               [](const Exponential&) { return 1.0; },
                               [](const GammaLaw& g) { return std::min(1.0, g.k); },
                               [](const EmpiricalDurations&) { return 1.0; }},
                    law_);
}

std::string DurationDistribution::describe() const {
  return std::visit(overloaded{[](const Weibull& w) { return fmt::format("weibull(m={},a={})", w.m, w.a); },
                               [](const Exponential& e) { return fmt::format("exponential(mean={})", e.mean); },
                               [](const GammaLaw& g) { return fmt::format("gamma(k={},theta={})", g.k, g.theta); },
                               [](const EmpiricalDurations& e) {
                                 return fmt::format("empirical(n={})", e.sorted->size());
                               }},
                    law_);
}

// ObservationDistribution -----------------------------------------------------------

ObservationDistribution ObservationDistribution::uniform_improper() {
  return ObservationDistribution(UniformImproper{});
}

ObservationDistribution ObservationDistribution::truncated_exponential(double rate) {
  require_positive(rate, "observation rate lambda");
  return ObservationDistribution(TruncatedExponential{rate});
}

ObservationDistribution ObservationDistribution::power_window(double p, double T) {
  if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError(fmt::format("window exponent p must be >= 0, got {}", p));
  require_positive(T, "window cutoff T");
  return ObservationDistribution(PowerWindow{p, T});
}

ObservationDistribution ObservationDistribution::empirical(const std::vector<double>& samples) {
  if (samples.size() < 2) throw DomainError("Empirical observation law needs at least 2 samples");
  double hi = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!(samples[i] >= 0.0) || !std::isfinite(samples[i])) {
      throw DomainError(fmt::format("observation offset #{} is negative or not finite: {}", i, samples[i]));
    }
    hi = std::max(hi, samples[i]);
  }
  if (hi == 0.0) throw DomainError("observation offsets are all zero; no density exists");
  const auto n = samples.size();
  const auto bins = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n)))), 1, 200);
  const double width = hi * (1.0 + 1e-12) / static_cast<double>(bins);
  std::vector<double> counts(bins, 0.0);
  for (double t : samples) counts[std::min(bins - 1, static_cast<std::size_t>(t / width))] += 1.0;
  EmpiricalObservations law{width, {}, {}};
  double acc = 0.0;
  for (double c : counts) {
    law.heights.push_back(c / (static_cast<double>(n) * width));
    acc += c / static_cast<double>(n);
    law.cumulative.push_back(acc);
  }
  law.cumulative.back() = 1.0;
  return ObservationDistribution(std::move(law));
}

double ObservationDistribution::density(double t) const {
  require_time(t, "obs_density");
  return std::visit(
      overloaded{[](const UniformImproper&) { return 1.0; },
                 [&](const TruncatedExponential& e) { return e.rate * std::exp(-e.rate * t); },
                 [&](const PowerWindow& w) {
                   if (t > w.T) return 0.0;
                   return (w.p + 1.0) * std::pow(t / w.T, w.p) / w.T;
                 },
                 [&](const EmpiricalObservations& h) {
                   const auto bin = static_cast<std::size_t>(t / h.bin_width);
                   return bin < h.heights.size() ? h.heights[bin] : 0.0;
                 }},
      law_);
}

double ObservationDistribution::density_at_origin() const { return density(0.0); }

double ObservationDistribution::derivative(double t) const {
  require_time(t, "obs_derivative");
  return std::visit(overloaded{[](const UniformImproper&) { return 0.0; },
                               [&](const TruncatedExponential& e) { return -e.rate * e.rate * std::exp(-e.rate * t); },
                               [&](const PowerWindow& w) {
                                 if (w.p == 0.0 || t > w.T) return 0.0;
                                 return (w.p + 1.0) * w.p * std::pow(t / w.T, w.p - 1.0) / (w.T * w.T);
                               },
                               [](const EmpiricalObservations&) { return 0.0; }},
                    law_);
}

std::vector<Jump> ObservationDistribution::jumps() const {
  return std::visit(overloaded{[](const UniformImproper&) { return std::vector<Jump>{}; },
                               [](const TruncatedExponential&) { return std::vector<Jump>{}; },
                               [](const PowerWindow& w) { return std::vector<Jump>{{w.T, -(w.p + 1.0) / w.T}}; },
                               [](const EmpiricalObservations& h) {
                                 std::vector<Jump> out;
                                 for (std::size_t i = 0; i < h.heights.size(); ++i) {
                                   const double next = i + 1 < h.heights.size() ? h.heights[i + 1] : 0.0;
                                   if (next != h.heights[i]) {
                                     out.push_back({h.bin_width * static_cast<double>(i + 1), next - h.heights[i]});
                                   }
                                 }
                                 return out;
                               }},
                    law_);
}

double ObservationDistribution::support_end() const {
  return std::visit(overloaded{[](const UniformImproper&) { return kInf; },
                               [](const TruncatedExponential&) { return kInf; },
                               [](const PowerWindow& w) { return w.T; },
                               [](const EmpiricalObservations& h) {
                                 return h.bin_width * static_cast<double>(h.heights.size());
                               }},
                    law_);
}

std::vector<double> ObservationDistribution::breakpoints() const {
  std::vector<double> out;
  if (const auto* h = std::get_if<EmpiricalObservations>(&law_)) {
    for (std::size_t i = 1; i < h->heights.size(); ++i) out.push_back(h->bin_width * static_cast<double>(i));
  }
  return out;
}

double ObservationDistribution::derivative_endpoint_exponent() const {
  if (const auto* w = std::get_if<PowerWindow>(&law_)) {
    if (w->p > 0.0 && w->p < 1.0) return w->p;
  }
  return 1.0;
}

double ObservationDistribution::scale() const {
  return std::visit(overloaded{[](const UniformImproper&) { return kInf; },
                               [](const TruncatedExponential& e) { return 1.0 / e.rate; },
                               [](const PowerWindow& w) { return w.T; },
                               [](const EmpiricalObservations& h) {
                                 return h.bin_width * static_cast<double>(h.heights.size());
                               }},
                    law_);
}

double ObservationDistribution::cdf(double t) const {
  require_time(t, "obs_cdf");
  return std::visit(
      overloaded{[](const UniformImproper&) -> double {
                   throw DomainError("improper uniform observation law has no CDF");
                 },
                 [&](const TruncatedExponential& e) { return -std::expm1(-e.rate * t); },
                 [&](const PowerWindow& w) { return t >= w.T ? 1.0 : std::pow(t / w.T, w.p + 1.0); },
                 [&](const EmpiricalObservations& h) {
                   const auto bin = static_cast<std::size_t>(t / h.bin_width);
                   if (bin >= h.heights.size()) return 1.0;
                   const double below = bin == 0 ? 0.0 : h.cumulative[bin - 1];
                   return below + h.heights[bin] * (t - h.bin_width * static_cast<double>(bin));
                 }},
      law_);
}

double ObservationDistribution::partial_moment(int k, double x) const {
  require_time(x, "obs_partial_moment");
  if (k < 0) throw DomainError("obs_partial_moment: order must be >= 0");
  return std::visit(
      overloaded{[&](const UniformImproper&) { return std::pow(x, k + 1) / (k + 1); },
                 [&](const TruncatedExponential& e) {
                   return std::tgamma(k + 1.0) / std::pow(e.rate, k) * special::gamma_p(k + 1.0, e.rate * x);
                 },
                 [&](const PowerWindow& w) {
                   const double y = std::min(x, w.T);
                   const double order = k + w.p + 1.0;
                   return (w.p + 1.0) / order * std::pow(y / w.T, w.p + 1.0) * std::pow(y, k);
                 },
                 [&](const EmpiricalObservations& h) {
                   double sum = 0.0;
                   for (std::size_t j = 0; j < h.heights.size(); ++j) {
                     const double lo = h.bin_width * static_cast<double>(j);
                     if (lo >= x) break;
                     const double hi = std::min(x, h.bin_width * static_cast<double>(j + 1));
                     sum += h.heights[j] * (std::pow(hi, k + 1) - std::pow(lo, k + 1)) / (k + 1);
                   }
                   return sum;
                 }},
      law_);
}

double ObservationDistribution::draw(Rng& rng) const {
  return std::visit(overloaded{[](const UniformImproper&) -> double {
                                 throw DomainError("cannot sample the improper uniform observation law");
                               },
                               [&](const TruncatedExponential& e) { return -std::log(rng.open_uniform()) / e.rate; },
                               [&](const PowerWindow& w) { return w.T * std::pow(rng.uniform(), 1.0 / (w.p + 1.0)); },
                               [&](const EmpiricalObservations& h) {
                                 const double u = rng.uniform();
                                 const auto it = std::upper_bound(h.cumulative.begin(), h.cumulative.end(), u);
                                 const auto bin =
                                     std::min<std::size_t>(it - h.cumulative.begin(), h.heights.size() - 1);
                                 return h.bin_width * (static_cast<double>(bin) + rng.uniform());
                               }},
                    law_);
}

std::vector<double> ObservationDistribution::sample(std::size_t count, std::uint64_t seed,
                                                    unsigned workers) const {
  if (is_uniform_improper()) throw DomainError("cannot sample the improper uniform observation law");
  std::vector<double> out(count);
  fill_sharded(out, seed, StreamRole::observations, workers, [&](Rng& rng, std::span<double> chunk) {
    for (double& x : chunk) x = draw(rng);
  });
  return out;
}

std::string ObservationDistribution::describe() const {
  return std::visit(overloaded{[](const UniformImproper&) { return std::string("uniform"); },
                               [](const TruncatedExponential& e) { return fmt::format("texp(lambda={})", e.rate); },
                               [](const PowerWindow& w) { return fmt::format("window(p={},T={})", w.p, w.T); },
                               [](const EmpiricalObservations& h) {
                                 return fmt::format("empirical(bins={})", h.heights.size());
                               }},
                    law_);
}

}  // namespace renewal
