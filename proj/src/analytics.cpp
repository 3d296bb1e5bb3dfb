#include "renewal/analytics.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "renewal/errors.hpp"
#include "renewal/rng.hpp"

namespace renewal {

namespace {

using special::QuadratureSpec;

constexpr double kInf = std::numeric_limits<double>::infinity();
// Relative dead band for the w = E(τ) boundary.
constexpr double kParadoxBand = 1e-12;

double relative_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

// Relative-only tolerance: every integrand below has constant sign.
QuadratureSpec relative_spec(double rel_tol, double endpoint_exponent, double scale) {
  QuadratureSpec spec;
  spec.abs_tol = 1e-300;
  spec.rel_tol = rel_tol;
  spec.max_subdivisions = 400;
  spec.endpoint_exponent = endpoint_exponent;
  spec.scale = scale;
  spec.tail_transform = special::TailTransform::rational_map;
  return spec;
}

double length_scale_of(const DurationDistribution& d) {
  return std::visit(
      [](const auto& law) -> double {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, Weibull>) {
          return std::pow(law.a, 1.0 / law.m);
        } else if constexpr (std::is_same_v<T, Exponential>) {
          return law.mean;
        } else if constexpr (std::is_same_v<T, GammaLaw>) {
          return law.k * law.theta;
        } else {
          const auto& v = *law.sorted;
          return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        }
      },
      d.variant());
}

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

// J_n(τ) = ∫_0^τ (τ - u)^n P_O(u) du via the partial moments of P_O.
double observed_polynomial_mass(const ObservationDistribution& o, int n, double tau) {
  if (o.is_uniform_improper()) return std::pow(tau, n + 1) / (n + 1);
  double sum = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    sum += sign * binomial(n, k) * std::pow(tau, n - k) * o.partial_moment(k, tau);
  }
  return sum;
}

void require_delta_order(int n) {
  if (n < 1 || n > 3) throw DomainError(fmt::format("delta_n: order must be 1, 2 or 3, got {}", n));
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::closed_form:
      return "closed-form";
    case Method::quadrature:
      return "quadrature";
    case Method::monte_carlo:
      return "monte-carlo";
  }
  return "unknown";
}

// Uniform observation ---------------------------------------------------------------

double waiting_pdf_uniform(const DurationDistribution& d, double s) {
  if (!(s >= 0.0)) throw DomainError(fmt::format("waiting_pdf_uniform: s must be non-negative, got {}", s));
  return d.survival(s) / d.mean();
}

double mean_wait_from_moments(double m1, double m2) {
  if (!(m1 > 0.0)) throw DomainError("mean duration must be positive");
  return m2 / (2.0 * m1);
}

StdFromMoments std_wait_from_moments(double m1, double m2, double m3) {
  if (!(m1 > 0.0)) throw DomainError("mean duration must be positive");
  const double lead = 4.0 * m3 * m1;
  const double radicand = lead - 3.0 * m2 * m2;
  const double relative = radicand / lead;
  if (relative < -kRadicandClamp) {
    throw NumericError(fmt::format(
        "waiting-time variance radicand is negative ({:.3e} relative to 4E(τ^3)E(τ)); moments are inconsistent",
        relative));
  }
  const double value = radicand <= 0.0 ? 0.0 : std::sqrt(radicand / (12.0 * m1 * m1));
  return {value, relative};
}

namespace weibull_closed_form {

double omega(double m, double a, double s) {
  return m * std::exp(-std::pow(s, m) / a) / (std::pow(a, 1.0 / m) * special::gamma_fn(1.0 / m));
}

double mean_wait(double m, double a) { return std::pow(a, 1.0 / m) * special::gamma_ratio(2.0 / m, 1.0 / m); }

double std_wait(double m, double a) {
  // Γ(1/m)Γ(3/m) - Γ(2/m)^2, divided through by Γ(1/m)^2.
  const double r3 = special::gamma_ratio(3.0 / m, 1.0 / m);
  const double r2 = special::gamma_ratio(2.0 / m, 1.0 / m);
  const double radicand = r3 - r2 * r2;
  return std::pow(a, 1.0 / m) * std::sqrt(std::max(0.0, radicand));
}

double mean_duration(double m, double a) { return std::pow(a, 1.0 / m) * special::gamma_fn(1.0 + 1.0 / m); }

double omega_cdf(double m, double a, double s) { return special::gamma_p(1.0 / m, std::pow(s, m) / a); }

}  // namespace weibull_closed_form

double mean_waiting_uniform(const DurationDistribution& d) {
  const double ratio = mean_wait_from_moments(d.raw_moment(1), d.raw_moment(2));
  if (const auto* w = std::get_if<Weibull>(&d.variant())) {
    const double closed = weibull_closed_form::mean_wait(w->m, w->a);
    if (relative_gap(closed, ratio) > 1e-10) {
      throw NumericError(fmt::format("mean_waiting_uniform: closed form {:.17g} disagrees with moment ratio {:.17g}",
                                     closed, ratio));
    }
    return closed;
  }
  return ratio;
}

double std_waiting_uniform(const DurationDistribution& d) {
  const double ratio = std_wait_from_moments(d.raw_moment(1), d.raw_moment(2), d.raw_moment(3)).value;
  if (const auto* w = std::get_if<Weibull>(&d.variant())) {
    const double closed = weibull_closed_form::std_wait(w->m, w->a);
    if (relative_gap(closed, ratio) > 1e-10) {
      throw NumericError(fmt::format("std_waiting_uniform: closed form {:.17g} disagrees with moment formula {:.17g}",
                                     closed, ratio));
    }
    return closed;
  }
  return ratio;
}

// WaitingTimeDensity -----------------------------------------------------------------

WaitingTimeDensity::WaitingTimeDensity(DurationDistribution d, ObservationDistribution o)
    : d_(std::move(d)), o_(std::move(o)) {
  z_ = numerator_moment_impl(0);
  if (!(z_ > 0.0) || !std::isfinite(z_)) {
    throw DomainError(fmt::format("waiting-time normalizer is {} for {} with {}: incompatible supports", z_,
                                  d_.describe(), o_.describe()));
  }
}

double WaitingTimeDensity::length_scale() const { return length_scale_of(d_); }

double WaitingTimeDensity::numerator_empirical(double s) const {
  const auto& taus = d_.empirical_samples();
  const auto first = std::lower_bound(taus.begin(), taus.end(), s);
  double sum = 0.0;
  if (o_.is_uniform_improper()) return static_cast<double>(taus.end() - first) / static_cast<double>(taus.size());
  for (auto it = first; it != taus.end(); ++it) sum += o_.density(*it - s);
  return sum / static_cast<double>(taus.size());
}

double WaitingTimeDensity::numerator(double s) const {
  if (!(s >= 0.0)) throw DomainError(fmt::format("waiting density: s must be non-negative, got {}", s));
  if (d_.is_empirical()) return numerator_empirical(s);
  if (o_.is_uniform_improper()) return d_.survival(s);

  const double p = d_.endpoint_exponent();
  const double length = std::min(length_scale(), o_.scale());
  auto integrand = [&](double u) { return o_.density(u) * d_.pdf(s + u); };
  const double end = o_.support_end();
  if (std::isinf(end)) {
    return special::integrate_semi_infinite(integrand, 0.0, relative_spec(1e-11, p, length));
  }
  std::vector<double> cuts{0.0};
  for (double b : o_.breakpoints()) cuts.push_back(b);
  cuts.push_back(end);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double hint = i == 0 ? p : 1.0;
    total += special::integrate_interval(integrand, cuts[i], cuts[i + 1], relative_spec(1e-11, hint, 1.0));
  }
  return total;
}

double WaitingTimeDensity::pdf(double s) const { return numerator(s) / z_; }

double WaitingTimeDensity::expect_over_duration(const std::function<double(double)>& g,
                                                 std::vector<double> cuts) const {
  const double p = d_.endpoint_exponent();
  auto integrand = [&](double tau) {
    const double density = d_.pdf(tau);
    return density == 0.0 ? 0.0 : density * g(tau);
  };
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::remove_if(cuts.begin(), cuts.end(), [](double c) { return !(c > 0.0) || std::isinf(c); }),
             cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double total = 0.0;
  double lo = 0.0;
  for (double c : cuts) {
    const double hint = lo == 0.0 ? p : 1.0;
    total += special::integrate_interval(integrand, lo, c, relative_spec(1e-11, hint, 1.0));
    lo = c;
  }
  const double hint = lo == 0.0 ? p : 1.0;
  total += special::integrate_semi_infinite(integrand, lo, relative_spec(1e-11, hint, length_scale()));
  return total;
}

double WaitingTimeDensity::numerator_moment_impl(int n) const {
  if (d_.is_empirical()) {
    const auto& taus = d_.empirical_samples();
    double sum = 0.0;
    double carry = 0.0;
    for (double tau : taus) {
      const double term = observed_polynomial_mass(o_, n, tau);
      const double t = sum + term;
      carry += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
      sum = t;
    }
    return (sum + carry) / static_cast<double>(taus.size());
  }
  std::vector<double> cuts = o_.breakpoints();
  cuts.push_back(o_.support_end());
  return expect_over_duration([&](double tau) { return observed_polynomial_mass(o_, n, tau); }, cuts);
}

double WaitingTimeDensity::numerator_moment(int n) const {
  if (n < 0) throw DomainError("numerator_moment: order must be >= 0");
  if (n == 0) return z_;
  return numerator_moment_impl(n);
}

double WaitingTimeDensity::cdf_direct(double s) const {
  if (!(s >= 0.0)) throw DomainError("cdf: s must be non-negative");
  if (s == 0.0) return 0.0;
  // ∫_0^s N = E_τ[mass of P_O on (τ - min(s, τ), τ)].
  auto reach_mass = [&](double tau) {
    const double reach = std::min(s, tau);
    if (o_.is_uniform_improper()) return reach;
    return o_.cdf(tau) - o_.cdf(tau - reach);
  };
  if (d_.is_empirical()) {
    double sum = 0.0;
    for (double tau : d_.empirical_samples()) sum += reach_mass(tau);
    return sum / static_cast<double>(d_.empirical_samples().size()) / z_;
  }
  std::vector<double> cuts = o_.breakpoints();
  const double end = o_.support_end();
  cuts.push_back(end);
  cuts.push_back(s);
  for (double b : o_.breakpoints()) cuts.push_back(s + b);
  if (std::isfinite(end)) cuts.push_back(s + end);
  return expect_over_duration(reach_mass, cuts) / z_;
}

double waiting_pdf_general(const DurationDistribution& d, const ObservationDistribution& o, double s) {
  return WaitingTimeDensity(d, o).pdf(s);
}

// δ_n -----------------------------------------------------------------------------

namespace {

double delta_literal(const DurationDistribution& d, const ObservationDistribution& o, int n) {
  const double end = o.support_end();
  const double po = o.derivative_endpoint_exponent();
  const double length = length_scale_of(d);
  const bool smooth_part = !std::holds_alternative<EmpiricalObservations>(o.variant()) &&
                           !(std::holds_alternative<PowerWindow>(o.variant()) &&
                             std::get<PowerWindow>(o.variant()).p == 0.0);
  const auto jumps = o.jumps();
  double total = 0.0;

  if (d.is_empirical()) {
    const auto& taus = d.empirical_samples();
    const auto count = static_cast<double>(taus.size());
    if (smooth_part) {
      for (double tau : taus) {
        const double top = std::min(tau, end);
        auto inner = [&](double u) { return std::pow(tau - u, n) / n * -o.derivative(u); };
        total += special::integrate_interval(inner, 0.0, top, relative_spec(1e-11, po, 1.0)) / count;
      }
    }
    for (const Jump& j : jumps) {
      double sum = 0.0;
      for (double tau : taus) {
        if (tau > j.at) sum += std::pow(tau - j.at, n) / n;
      }
      total += -j.size * sum / count;
    }
    return total;
  }

  if (smooth_part) {
    const QuadratureSpec inner_spec = relative_spec(1e-11, po, std::min(length, o.scale()));
    auto inner = [&](double s) {
      auto f = [&](double u) { return d.pdf(s + u) * -o.derivative(u); };
      return std::isinf(end) ? special::integrate_semi_infinite(f, 0.0, inner_spec)
                             : special::integrate_interval(f, 0.0, end, relative_spec(1e-11, po, 1.0));
    };
    total += special::integrate_semi_infinite([&](double s) { return std::pow(s, n) / n * inner(s); }, 0.0,
                                              relative_spec(1e-9, 1.0, length));
  }
  for (const Jump& j : jumps) {
    const double mass = special::integrate_semi_infinite(
        [&](double s) { return std::pow(s, n) / n * d.pdf(s + j.at); }, 0.0, relative_spec(1e-10, 1.0, length));
    total += -j.size * mass;
  }
  return total;
}

}  // namespace

double delta_n(const DurationDistribution& d, const ObservationDistribution& o, int n, DeltaReading reading) {
  require_delta_order(n);
  if (o.is_uniform_improper()) return 0.0;
  if (reading == DeltaReading::literal) return delta_literal(d, o, n);
  const WaitingTimeDensity density(d, o);
  return o.density_at_origin() * d.raw_moment(n) / n - density.numerator_moment(n - 1);
}

DeltaMoments moments_from_deltas(double c, double m1, double m2, double m3, const std::array<double, 3>& delta) {
  const double e1 = c * m1;
  const double e2 = c * m2;
  const double e3 = c * m3;
  const auto [d1, d2, d3] = delta;
  const double denom = e1 - d1;
  if (!(denom > 0.0)) throw NumericError(fmt::format("moment ratio denominator E(τ) - δ1 = {} is not positive", denom));
  const double mean = (e2 / 2.0 - d2) / denom;
  const double second = (e3 / 3.0 - d3) / denom;
  // Dimensionally consistent form: the uniform limit needs 3E(τ^2)^2.
  const double g = -4.0 * d1 * e3 - 12.0 * d3 * e1 + 12.0 * d2 * e2 + 12.0 * d1 * d3 - 12.0 * d2 * d2;
  const double radicand = (4.0 * e3 * e1 - 3.0 * e2 * e2 + g) / (12.0 * denom * denom);
  return {mean, second, std::sqrt(std::max(0.0, radicand))};
}

WaitingTimeAnalysis waiting_moments_general(const DurationDistribution& d, const ObservationDistribution& o) {
  WaitingTimeAnalysis out;
  const double m1 = d.raw_moment(1);
  const double m2 = d.raw_moment(2);
  const double m3 = d.raw_moment(3);
  out.mean_duration = m1;
  const WaitingTimeDensity density(d, o);

  if (o.is_uniform_improper()) {
    out.mean_wait = mean_waiting_uniform(d);
    out.std_dev = std_waiting_uniform(d);
    out.second_moment = m3 / (3.0 * m1);
    out.delta = {0.0, 0.0, 0.0};
    out.method = d.is_empirical() ? Method::monte_carlo : Method::closed_form;
    const double mean_q = density.moment(1);
    const double second_q = density.moment(2);
    if (relative_gap(mean_q, out.mean_wait) > 1e-7 || relative_gap(second_q, out.second_moment) > 1e-7) {
      throw NumericError(fmt::format(
          "uniform-observation moments disagree: closed form (<s>={:.12g}, <s^2>={:.12g}) vs quadrature ({:.12g}, {:.12g})",
          out.mean_wait, out.second_moment, mean_q, second_q));
    }
  } else {
    out.method = Method::quadrature;
    out.mean_wait = density.moment(1);
    out.second_moment = density.moment(2);
    const double variance = out.second_moment - out.mean_wait * out.mean_wait;
    out.std_dev = std::sqrt(std::max(0.0, variance));
    for (int n = 1; n <= 3; ++n) out.delta[n - 1] = delta_n(d, o, n, DeltaReading::literal);
    const DeltaMoments ratio = moments_from_deltas(o.density_at_origin(), m1, m2, m3, out.delta);
    const double variance_ratio = ratio.std_dev * ratio.std_dev;
    if (relative_gap(ratio.mean_wait, out.mean_wait) > 1e-6 ||
        relative_gap(ratio.second_moment, out.second_moment) > 1e-6 ||
        std::abs(variance_ratio - variance) > 1e-6 * out.second_moment) {
      throw NumericError(fmt::format(
          "δ-corrected moments (<s>={:.12g}, <s^2>={:.12g}, σ={:.12g}) disagree with direct quadrature "
          "(<s>={:.12g}, <s^2>={:.12g}, σ={:.12g})",
          ratio.mean_wait, ratio.second_moment, ratio.std_dev, out.mean_wait, out.second_moment, out.std_dev));
    }
  }
  out.paradox = out.mean_wait - m1 > kParadoxBand * m1;
  return out;
}

// Inspection paradox ---------------------------------------------------------------

InspectionGap inspection_gap(const DurationDistribution& d) {
  const double m1 = d.raw_moment(1);
  const double m2 = d.raw_moment(2);
  const double gap = mean_waiting_uniform(d) - m1;
  const bool by_gap = gap > kParadoxBand * m1;
  const bool by_moments = m2 - 2.0 * m1 * m1 > 2.0 * kParadoxBand * m1 * m1;
  if (by_gap != by_moments) {
    throw NumericError(fmt::format("inspection_gap: predicates disagree (gap {:.17g}, E2 - 2E1^2 = {:.17g})", gap,
                                   m2 - 2.0 * m1 * m1));
  }
  return {gap, by_gap};
}

std::vector<ParadoxRow> paradox_sweep(double a, std::span<const double> m_grid, unsigned workers) {
  if (!(a > 0.0)) throw DomainError("paradox_sweep: a must be positive");
  for (double m : m_grid) {
    if (!(m > 0.0) || !std::isfinite(m)) throw DomainError(fmt::format("paradox_sweep: grid value {} is not positive", m));
  }
  std::vector<ParadoxRow> rows(m_grid.size());
  for_each_shard(m_grid.size(), workers, [&](std::size_t i) {
    const auto d = DurationDistribution::weibull(m_grid[i], a);
    const InspectionGap g = inspection_gap(d);
    rows[i] = {m_grid[i], d.raw_moment(1), mean_waiting_uniform(d), g.paradox};
  });
  return rows;
}

int sign_changes(std::span<const ParadoxRow> rows) {
  int changes = 0;
  int last = 0;
  for (const ParadoxRow& r : rows) {
    const double gap = r.mean_wait - r.mean_duration;
    int sign = 0;
    if (gap > kParadoxBand * r.mean_duration) sign = 1;
    if (gap < -kParadoxBand * r.mean_duration) sign = -1;
    if (sign == 0) continue;
    if (last != 0 && sign != last) ++changes;
    last = sign;
  }
  return changes;
}

// Tabulated CDF ---------------------------------------------------------------------

namespace {

// Graded nodes s = L (x / (1 - x))^(1/p): dense at the origin where Ω' may be
// singular, geometric in the tail.
double graded_node(double length, double p, double x) {
  const double r = x / (1.0 - x);
  return length * (p == 1.0 ? r : std::pow(r, 1.0 / p));
}

double gk15_cell(const WaitingTimeDensity& density, double a, double b) {
  static constexpr std::array<double, 8> xgk = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.0};
  static constexpr std::array<double, 8> wgk = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double sum = wgk[7] * density.pdf(c);
  for (int j = 0; j < 7; ++j) sum += wgk[j] * (density.pdf(c - h * xgk[j]) + density.pdf(c + h * xgk[j]));
  return sum * h;
}

}  // namespace

WaitingCdf::WaitingCdf(const WaitingTimeDensity& density, std::size_t cells) {
  if (cells < 2) throw DomainError("WaitingCdf: need at least 2 cells");
  const double length = density.length_scale();
  const double p = density.endpoint_exponent();
  nodes_.resize(cells + 1);
  for (std::size_t j = 0; j <= cells; ++j) {
    const double x = static_cast<double>(j) / static_cast<double>(cells + 1);
    nodes_[j] = graded_node(length, p, x);
  }
  if (density.duration().is_empirical()) {
    nodes_.back() = std::max(nodes_.back(), density.duration().empirical_samples().back());
    values_.reserve(nodes_.size());
    for (double s : nodes_) values_.push_back(density.cdf_direct(s));
    return;
  }
  values_.assign(nodes_.size(), 0.0);
  for (std::size_t j = 1; j < nodes_.size(); ++j) {
    values_[j] = values_[j - 1] + gk15_cell(density, nodes_[j - 1], nodes_[j]);
  }
}

double WaitingCdf::operator()(double s) const {
  if (!(s > 0.0)) return 0.0;
  if (s >= nodes_.back()) return values_.back();
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), s);
  const auto j = static_cast<std::size_t>(it - nodes_.begin());
  const double w = (s - nodes_[j - 1]) / (nodes_[j] - nodes_[j - 1]);
  return values_[j - 1] + w * (values_[j] - values_[j - 1]);
}

OmegaCurve omega_curve(const WaitingTimeDensity& density, std::size_t points, std::optional<double> s_max) {
  if (points < 2) throw DomainError("omega_curve: need at least 2 points");
  const WaitingCdf cdf(density);
  double top;
  if (s_max) {
    if (!(*s_max > 0.0)) throw DomainError("omega_curve: s_max must be positive");
    top = *s_max;
  } else {
    // Bisect for the point where the tail mass drops to 1e-6.
    double lo = 0.0;
    double hi = density.length_scale();
    while (cdf.total_mass() - cdf(hi) > 1e-6 && hi < 1e300) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      (cdf.total_mass() - cdf(mid) > 1e-6 ? lo : hi) = mid;
    }
    top = hi;
  }
  const double length = density.length_scale();
  const double p = density.endpoint_exponent();
  const double r_max = p == 1.0 ? top / length : std::pow(top / length, p);
  const double x_max = r_max / (1.0 + r_max);
  OmegaCurve curve;
  curve.s.reserve(points);
  curve.omega.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double s = i + 1 == points ? top
                                     : graded_node(length, p, x_max * static_cast<double>(i) /
                                                                  static_cast<double>(points - 1));
    curve.s.push_back(s);
    curve.omega.push_back(density.pdf(s));
  }
  curve.tail_mass = std::max(0.0, 1.0 - density.cdf_direct(top));
  return curve;
}

}  // namespace renewal
