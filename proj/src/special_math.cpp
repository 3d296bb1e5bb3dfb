#include "renewal/special_math.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "renewal/errors.hpp"

namespace renewal::special {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kTiny = std::numeric_limits<double>::min();
// Largest argument for which Γ(x) is representable.
constexpr double kGammaMaxArg = 171.6;

void require_positive(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError(fmt::format("{}: argument must be positive and finite, got {}", what, x));
  }
}

// Series for P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a, x), valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
  constexpr double kFloor = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kFloor;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kFloor) d = kFloor;
    c = b + an / c;
    if (std::abs(c) < kFloor) c = kFloor;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// Gauss-Kronrod 7/15 nodes and weights (QUADPACK qk15).
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

Segment gk15(const std::function<double(double)>& g, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = g(center);
  double resg = fc * kWg[3];
  double resk = fc * kWgk[7];
  double resabs = std::abs(resk);
  std::array<double, 7> fv1{};
  std::array<double, 7> fv2{};
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = g(center - dx);
    const double f2 = g(center + dx);
    fv1[j] = f1;
    fv2[j] = f2;
    resk += kWgk[j] * (f1 + f2);
    resabs += kWgk[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  const double reskh = 0.5 * resk;
  double resasc = kWgk[7] * std::abs(fc - reskh);
  for (int j = 0; j < 7; ++j) {
    resasc += kWgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));
  }
  const double scale = std::abs(half);
  resabs *= scale;
  resasc *= scale;
  double err = std::abs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0) {
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  }
  if (resabs > kTiny / (50.0 * kEps)) err = std::max(50.0 * kEps * resabs, err);
  return {a, b, resk * half, err};
}

QuadratureResult adaptive(const std::function<double(double)>& g, double a, double b,
                          const QuadratureSpec& spec, const char* what) {
  spec.validate();
  if (a == b) return {};
  std::priority_queue<Segment> heap;
  Segment first = gk15(g, a, b);
  double total = first.value;
  double total_err = first.error;
  heap.push(first);
  int segments = 1;
  auto tolerance = [&] { return std::max(spec.abs_tol, spec.rel_tol * std::abs(total)); };
  bool exhausted = false;
  while (total_err > tolerance() && segments < spec.max_subdivisions) {
    const Segment worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b) ||
        std::abs(worst.b - worst.a) < 100.0 * kEps * std::max(std::abs(worst.a), std::abs(worst.b))) {
      exhausted = true;
      break;
    }
    heap.pop();
    const Segment left = gk15(g, worst.a, mid);
    const Segment right = gk15(g, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++segments;
  }
  // Re-sum to shed the drift of the running totals.
  total = 0.0;
  total_err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    total_err += heap.top().error;
    heap.pop();
  }
  if (!std::isfinite(total)) {
    throw NumericError(fmt::format("{}: integral is not finite", what));
  }
  if (total_err > tolerance()) {
    throw QuadratureError(
        fmt::format("{}: no convergence after {} subdivisions{} (estimate {:.17g}, error {:.3g})",
                    what, segments, exhausted ? " (interval below resolution)" : "", total,
                    total_err),
        total, total_err);
  }
  return {total, total_err, segments};
}

double checked(double value, double t) {
  if (std::isnan(value)) {
    throw NumericError(fmt::format("integrand returned NaN at t = {}", t));
  }
  return value;
}

}  // namespace

double gamma_fn(double x) {
  require_positive(x, "gamma_fn");
  if (x > kGammaMaxArg) {
    throw NumericError(fmt::format("gamma_fn: Γ({}) overflows", x));
  }
  return std::tgamma(x);
}

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  return std::lgamma(x);
}

double gamma_ratio(double num, double den) {
  require_positive(num, "gamma_ratio");
  require_positive(den, "gamma_ratio");
  if (num < kGammaMaxArg && den < kGammaMaxArg) return std::tgamma(num) / std::tgamma(den);
  const double log_ratio = std::lgamma(num) - std::lgamma(den);
  if (log_ratio > std::log(std::numeric_limits<double>::max())) {
    throw NumericError(fmt::format("gamma_ratio: Γ({})/Γ({}) overflows", num, den));
  }
  return std::exp(log_ratio);
}

double gamma_p(double a, double x) {
  require_positive(a, "gamma_p");
  if (x < 0.0 || std::isnan(x)) throw DomainError("gamma_p: x must be non-negative");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x < a + 1.0) return gamma_p_series(a, x);
  return 1.0 - gamma_q_fraction(a, x);
}

double gamma_q(double a, double x) {
  require_positive(a, "gamma_q");
  if (x < 0.0 || std::isnan(x)) throw DomainError("gamma_q: x must be non-negative");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_fraction(a, x);
}

double gamma_q_inv(double a, double q) {
  require_positive(a, "gamma_q_inv");
  if (!(q > 0.0 && q <= 1.0)) throw DomainError(fmt::format("gamma_q_inv: q = {} outside (0, 1]", q));
  if (q == 1.0) return 0.0;
  // Solve on whichever tail is small to keep relative accuracy.
  const bool upper = q < 0.5;
  const double target = upper ? q : 1.0 - q;
  auto residual = [&](double x) { return upper ? gamma_q(a, x) - target : gamma_p(a, x) - target; };
  // residual is decreasing in x for the upper tail, increasing for the lower.
  const double sign = upper ? -1.0 : 1.0;
  double lo = 0.0;
  double hi = std::max(1.0, a);
  while (sign * residual(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw NumericError("gamma_q_inv: failed to bracket root");
  }
  double x = 0.5 * (lo + hi);
  const double log_norm = std::lgamma(a);
  for (int iter = 0; iter < 200; ++iter) {
    const double r = residual(x);
    if (r == 0.0) return x;
    if (sign * r < 0.0) lo = x; else hi = x;
    // d/dx P(a, x) = x^(a-1) e^(-x) / Γ(a)
    const double density = std::exp((a - 1.0) * std::log(x) - x - log_norm);
    double next = x - sign * r / density;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * x || hi - lo <= 1e-15 * hi) return next;
    x = next;
  }
  return x;
}

void QuadratureSpec::validate() const {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0)) throw DomainError("QuadratureSpec: tolerances must be positive");
  if (max_subdivisions < 1) throw DomainError("QuadratureSpec: max_subdivisions must be >= 1");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw DomainError("QuadratureSpec: scale must be positive");
  if (!(endpoint_exponent > 0.0 && endpoint_exponent <= 1.0)) {
    throw DomainError("QuadratureSpec: endpoint_exponent must lie in (0, 1]");
  }
}

QuadratureSpec QuadratureSpec::tightened(double factor) const {
  QuadratureSpec out = *this;
  out.abs_tol *= factor;
  out.rel_tol *= factor;
  return out;
}

QuadratureResult integrate_interval_detailed(const std::function<double(double)>& f, double lo,
                                             double hi, const QuadratureSpec& spec) {
  spec.validate();
  if (!(hi >= lo)) throw DomainError("integrate_interval: requires lo <= hi");
  const double p = spec.endpoint_exponent;
  if (p == 1.0) {
    return adaptive([&](double t) { return checked(f(t), t); }, lo, hi, spec, "integrate_interval");
  }
  const double inv_p = 1.0 / p;
  auto g = [&](double u) {
    const double t = lo + std::pow(u, inv_p);
    const double jac = inv_p * std::pow(u, inv_p - 1.0);
    return jac == 0.0 ? 0.0 : checked(f(t), t) * jac;
  };
  return adaptive(g, 0.0, std::pow(hi - lo, p), spec, "integrate_interval");
}

double integrate_interval(const std::function<double(double)>& f, double lo, double hi,
                          const QuadratureSpec& spec) {
  return integrate_interval_detailed(f, lo, hi, spec).value;
}

QuadratureResult integrate_semi_infinite_detailed(const std::function<double(double)>& f,
                                                  double lower, const QuadratureSpec& spec) {
  spec.validate();
  if (!std::isfinite(lower)) throw DomainError("integrate_semi_infinite: lower bound must be finite");
  const double c = spec.scale;
  const double inv_p = 1.0 / spec.endpoint_exponent;
  const bool log_map = spec.tail_transform == TailTransform::log_map;
  auto g = [&](double x) {
    double v;
    double dv;
    if (log_map) {
      v = -std::log1p(-x);
      dv = 1.0 / (1.0 - x);
    } else {
      v = x / (1.0 - x);
      dv = 1.0 / ((1.0 - x) * (1.0 - x));
    }
    const double w = inv_p == 1.0 ? v : std::pow(v, inv_p);
    const double t = lower + c * w;
    if (!std::isfinite(t)) return 0.0;
    const double jac = c * dv * (inv_p == 1.0 ? 1.0 : inv_p * std::pow(v, inv_p - 1.0));
    if (jac == 0.0) return 0.0;
    const double value = checked(f(t), t);
    if (value == 0.0 || !std::isfinite(jac)) return 0.0;
    return value * jac;
  };
  return adaptive(g, 0.0, 1.0, spec, "integrate_semi_infinite");
}

double integrate_semi_infinite(const std::function<double(double)>& f, double lower,
                               const QuadratureSpec& spec) {
  return integrate_semi_infinite_detailed(f, lower, spec).value;
}

double integrate_box(const std::function<double(double, double)>& f, const QuadratureSpec& spec) {
  spec.validate();
  const QuadratureSpec inner = spec.tightened(0.1);
  auto outer = [&](double s) {
    return integrate_semi_infinite([&](double tau) { return f(s, tau); }, s, inner);
  };
  return integrate_semi_infinite(outer, 0.0, spec);
}

}  // namespace renewal::special
