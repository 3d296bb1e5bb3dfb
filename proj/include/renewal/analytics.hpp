#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "renewal/distributions.hpp"
#include "renewal/special_math.hpp"

namespace renewal {

enum class Method { closed_form, quadrature, monte_carlo };

std::string to_string(Method method);

/// Waiting-time summary: s is the time from an observation instant to the
/// next update, τ the duration that contains the observation.
struct WaitingTimeAnalysis {
  double mean_wait = 0.0;      // w = <s>
  double second_moment = 0.0;  // <s^2>
  double std_dev = 0.0;        // σ
  double mean_duration = 0.0;  // E(τ)
  std::array<double, 3> delta{0.0, 0.0, 0.0};
  bool paradox = false;  // w > E(τ)
  Method method = Method::closed_form;

  // Monte Carlo only.
  std::size_t count = 0;
  std::optional<double> mean_wait_stderr;
  std::optional<double> std_dev_stderr;
  // w recovered from the durations alone, E(τ^2) / 2E(τ).
  std::optional<double> plugin_mean_wait;

  // Data-quality notes (sample-moment estimates only).
  std::vector<std::string> diagnostics;
};

// Uniform observation ------------------------------------------------------------

/// Ω(s) = survival(s) / E(τ).
double waiting_pdf_uniform(const DurationDistribution& d, double s);

/// w = E(τ^2) / 2E(τ). Weibull laws return a^(1/m) Γ(2/m) / Γ(1/m), checked
/// against the moment ratio to 1e-10 relative.
double mean_waiting_uniform(const DurationDistribution& d);

/// σ = sqrt[(4E(τ^3)E(τ) - 3E(τ^2)^2) / 12E(τ)^2]; Weibull laws use
/// a^(1/m) sqrt(Γ(1/m)Γ(3/m) - Γ(2/m)^2) / Γ(1/m), checked the same way.
double std_waiting_uniform(const DurationDistribution& d);

/// Moment-ratio forms shared with the sample-moment estimator.
double mean_wait_from_moments(double m1, double m2);

/// Radicand relative to 4 E(τ^3) E(τ). Values in [-1e-12, 0) are clamped to
/// zero; anything lower is a numerical inconsistency.
inline constexpr double kRadicandClamp = 1e-12;

struct StdFromMoments {
  double value;
  double relative_radicand;
};
/// Throws NumericError when the radicand is negative beyond the clamp.
StdFromMoments std_wait_from_moments(double m1, double m2, double m3);

namespace weibull_closed_form {
double omega(double m, double a, double s);
double mean_wait(double m, double a);
double std_wait(double m, double a);
double mean_duration(double m, double a);
/// ∫_0^s Ω = P(1/m, s^m / a).
double omega_cdf(double m, double a, double s);
}  // namespace weibull_closed_form

// General observation laws ----------------------------------------------------------

/// How the derivative in the δ_n correction is read.
///  literal: ∂P_O(τ-s)/∂s = -P_O'(τ-s), with jumps of P_O contributing point
///           masses; evaluated as a wedge double integral.
///  integration_by_parts: δ_n := P_O(0) E(τ^n)/n - ∫ s^(n-1) N(s) ds, the value
///           the moment ratios need, with N the unnormalized waiting density.
enum class DeltaReading { literal, integration_by_parts };

/// Waiting-time density for an arbitrary (duration, observation) pair:
/// Ω(s) = N(s) / Z with N(s) = ∫_s^∞ P_W(τ) P_O(τ - s) dτ and Z = ∫_0^∞ N.
/// Z is always the direct integral of N.
class WaitingTimeDensity {
 public:
  WaitingTimeDensity(DurationDistribution d, ObservationDistribution o);

  const DurationDistribution& duration() const { return d_; }
  const ObservationDistribution& observation() const { return o_; }

  double numerator(double s) const;
  double normalizer() const { return z_; }
  double pdf(double s) const;
  /// ∫_0^∞ s^n N(s) ds, taken in the order E_τ[∫_0^τ (τ-u)^n P_O(u) du] so only
  /// one quadrature is needed (exact sums for empirical laws).
  double numerator_moment(int n) const;
  /// <s^n> = numerator_moment(n) / Z.
  double moment(int n) const { return numerator_moment(n) / z_; }
  /// ∫_0^s Ω.
  double cdf_direct(double s) const;

  /// Length scale of the duration law in τ units.
  double length_scale() const;
  /// Endpoint exponent used for the grid and quadrature substitutions.
  double endpoint_exponent() const { return d_.endpoint_exponent(); }

 private:
  double numerator_empirical(double s) const;
  double numerator_moment_impl(int n) const;
  /// ∫ P_W(τ) g(τ) dτ, split at the given cut points.
  double expect_over_duration(const std::function<double(double)>& g, std::vector<double> cuts) const;

  DurationDistribution d_;
  ObservationDistribution o_;
  double z_ = 0.0;
};

/// Ω(s) for the general case (builds the density and its normalizer).
double waiting_pdf_general(const DurationDistribution& d, const ObservationDistribution& o, double s);

/// δ_n for n in 1..3. Exactly 0 for the improper uniform law.
double delta_n(const DurationDistribution& d, const ObservationDistribution& o, int n,
               DeltaReading reading = DeltaReading::literal);

/// Moment ratios with δ corrections. `c` is P_O(0); the improper uniform law
/// has c = 1.
struct DeltaMoments {
  double mean_wait;
  double second_moment;
  double std_dev;  // through the G term
};
DeltaMoments moments_from_deltas(double c, double m1, double m2, double m3, const std::array<double, 3>& delta);

/// Full analysis. Uniform observation uses the closed forms (cross-checked
/// against quadrature of ∫ s^n Ω); otherwise the stored moments come from
/// direct quadrature and are cross-checked against the δ_n moment ratios to
/// 1e-6 relative (NumericError naming both values on mismatch).
WaitingTimeAnalysis waiting_moments_general(const DurationDistribution& d, const ObservationDistribution& o);

// Inspection paradox ------------------------------------------------------------

struct InspectionGap {
  double gap;  // w - E(τ)
  bool paradox;
};

/// paradox = (w > E(τ)), equivalently E(τ^2) > 2E(τ)^2; both predicates are
/// evaluated with a 1e-12 relative dead band and must agree.
InspectionGap inspection_gap(const DurationDistribution& d);

struct ParadoxRow {
  double m;
  double mean_duration;
  double mean_wait;
  bool paradox;
};

std::vector<ParadoxRow> paradox_sweep(double a, std::span<const double> m_grid, unsigned workers = 1);

/// Number of sign changes of (w - E(τ)) along the sweep, zeros skipped.
int sign_changes(std::span<const ParadoxRow> rows);

// Tabulated CDF -----------------------------------------------------------------

/// CDF of Ω tabulated on a graded grid and interpolated linearly.
class WaitingCdf {
 public:
  explicit WaitingCdf(const WaitingTimeDensity& density, std::size_t cells = 4096);

  double operator()(double s) const;
  double total_mass() const { return values_.back(); }

 private:
  std::vector<double> nodes_;
  std::vector<double> values_;
};

/// Ω(s) sampled on `points` nodes over [0, s_max], graded toward the origin.
/// A missing s_max is set where the tail mass falls to 1e-6.
struct OmegaCurve {
  std::vector<double> s;
  std::vector<double> omega;
  double tail_mass;  // ∫_{s_max}^∞ Ω
};
OmegaCurve omega_curve(const WaitingTimeDensity& density, std::size_t points,
                       std::optional<double> s_max = std::nullopt);

}  // namespace renewal
