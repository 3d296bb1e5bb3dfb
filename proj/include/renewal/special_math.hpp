#pragma once

#include <functional>

namespace renewal::special {

/// Gamma function for x > 0. Throws DomainError for x <= 0 and NumericError
/// when the result overflows a double.
double gamma_fn(double x);

/// log Γ(x) for x > 0.
double log_gamma(double x);

/// Γ(num) / Γ(den), evaluated through log-gamma when either factor would
/// overflow on its own.
double gamma_ratio(double num, double den);

/// Regularized incomplete gamma functions P(a, x) and Q(a, x) = 1 - P(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

/// Smallest x with Q(a, x) = q, for q in (0, 1].
double gamma_q_inv(double a, double q);

enum class TailTransform {
  log_map,       // t = lower - c ln(1 - x): exponential tails become polynomial
  rational_map,  // t = lower + c x / (1 - x): suited to algebraic tails
};

struct QuadratureSpec {
  double abs_tol = 1e-10;
  double rel_tol = 1e-9;
  int max_subdivisions = 200;
  TailTransform tail_transform = TailTransform::log_map;
  // Decay length c of the tail map: t = lower + c * v^(1/p), v the mapped
  // variable on [0, inf).
  double scale = 1.0;
  // p in (0, 1]: the integrand behaves like (t - lower)^(p - 1) near the
  // lower endpoint. Values below 1 switch on the substitution
  // t - lower = u^(1/p), which removes the singularity (u = τ^m for a
  // Weibull density with m < 1).
  double endpoint_exponent = 1.0;

  void validate() const;

  QuadratureSpec tightened(double factor) const;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int subdivisions = 0;
};

/// Adaptive 15-point Gauss-Kronrod integration of f over [lo, hi].
/// Throws QuadratureError if the tolerance is not met.
QuadratureResult integrate_interval_detailed(const std::function<double(double)>& f,
                                             double lo, double hi,
                                             const QuadratureSpec& spec = {});
double integrate_interval(const std::function<double(double)>& f, double lo, double hi,
                          const QuadratureSpec& spec = {});

/// ∫_lower^∞ f(t) dt through the tail transform of `spec`.
QuadratureResult integrate_semi_infinite_detailed(const std::function<double(double)>& f,
                                                  double lower,
                                                  const QuadratureSpec& spec = {});
double integrate_semi_infinite(const std::function<double(double)>& f, double lower,
                               const QuadratureSpec& spec = {});

/// ∫_0^∞ ds ∫_s^∞ dτ f(s, τ) over the wedge 0 <= s <= τ. Iterated: outer in
/// s, inner in τ with tolerances ten times tighter than the outer ones.
double integrate_box(const std::function<double(double, double)>& f,
                     const QuadratureSpec& spec = {});

}  // namespace renewal::special
