#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace renewal {

class Rng;

// Duration laws P_W(τ) ---------------------------------------------------------

/// Weibull law with density (m/a) τ^(m-1) exp(-τ^m / a).
///
/// `a` is not the conventional scale λ: a = λ^m. Survival is exp(-s^m / a)
/// and E(τ^n) = a^(n/m) Γ(1 + n/m).
struct Weibull {
  double m;
  double a;
};

struct Exponential {
  double mean;
};

struct GammaLaw {
  double k;
  double theta;
};

/// Raw duration sample; moments are plain sample means of τ_i^n.
struct EmpiricalDurations {
  std::shared_ptr<const std::vector<double>> sorted;
};

class DurationDistribution {
 public:
  using Variant = std::variant<Weibull, Exponential, GammaLaw, EmpiricalDurations>;

  static DurationDistribution weibull(double m, double a);
  /// Weibull from the conventional (shape, scale λ) pair.
  static DurationDistribution weibull_conventional(double shape, double lambda);
  static DurationDistribution exponential(double mean);
  static DurationDistribution gamma(double k, double theta);
  static DurationDistribution empirical(std::vector<double> samples);

  const Variant& variant() const { return law_; }
  bool is_empirical() const { return std::holds_alternative<EmpiricalDurations>(law_); }
  const std::vector<double>& empirical_samples() const;

  /// Density. Empirical laws have none and throw DomainError.
  double pdf(double tau) const;
  double cdf(double tau) const;
  double survival(double s) const;
  /// Smallest τ with survival(τ) <= q, for q in (0, 1].
  double inverse_survival(double q) const;
  double raw_moment(int n) const;
  double mean() const { return raw_moment(1); }
  /// ∫_lo^hi τ dP_W(τ).
  double partial_first_moment(double lo, double hi) const;

  double draw(Rng& rng) const;
  std::vector<double> sample(std::size_t count, std::uint64_t seed, unsigned workers = 1) const;

  /// Exponent p with P_W(τ) ~ τ^(p-1) at the origin, capped at 1.
  double endpoint_exponent() const;

  std::string describe() const;

 private:
  explicit DurationDistribution(Variant law) : law_(std::move(law)) {}
  Variant law_;
};

// Observation laws P_O(t) ------------------------------------------------------

/// P_O(t) = 1 on [0, ∞). Not normalizable; only meaningful inside the ratio
/// formulas for Ω(s), where the constant cancels.
struct UniformImproper {};

/// λ e^(-λt) on [0, ∞); the condition t <= τ truncates it within a duration.
struct TruncatedExponential {
  double rate;
};

/// (p + 1) t^p / T^(p+1) on [0, T]. p = 0 is the uniform window of width T.
struct PowerWindow {
  double p;
  double T;
};

/// Histogram density built from observed offsets (equal-width bins).
struct EmpiricalObservations {
  double bin_width;
  std::vector<double> heights;
  std::vector<double> cumulative;  // cumulative probability at each right bin edge
};

/// Discontinuity of P_O: size = P_O(at+) - P_O(at-).
struct Jump {
  double at;
  double size;
};

class ObservationDistribution {
 public:
  using Variant = std::variant<UniformImproper, TruncatedExponential, PowerWindow, EmpiricalObservations>;

  static ObservationDistribution uniform_improper();
  static ObservationDistribution truncated_exponential(double rate);
  static ObservationDistribution power_window(double p, double T);
  static ObservationDistribution empirical(const std::vector<double>& samples);

  const Variant& variant() const { return law_; }
  bool is_uniform_improper() const { return std::holds_alternative<UniformImproper>(law_); }
  bool is_proper() const { return !is_uniform_improper(); }

  double density(double t) const;
  double density_at_origin() const;
  /// Derivative of the density away from its jumps.
  double derivative(double t) const;
  std::vector<Jump> jumps() const;
  /// Right end of the support (infinity for unbounded laws).
  double support_end() const;
  /// Points inside (0, support_end()) where the density is not smooth.
  std::vector<double> breakpoints() const;
  /// Exponent p with derivative ~ t^(p-1) near the origin, capped at 1.
  double derivative_endpoint_exponent() const;
  double scale() const;

  double cdf(double t) const;
  /// ∫_0^x u^k P_O(u) du.
  double partial_moment(int k, double x) const;
  double draw(Rng& rng) const;
  std::vector<double> sample(std::size_t count, std::uint64_t seed, unsigned workers = 1) const;

  std::string describe() const;

 private:
  explicit ObservationDistribution(Variant law) : law_(std::move(law)) {}
  Variant law_;
};

}  // namespace renewal
