#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "renewal/analytics.hpp"
#include "renewal/distributions.hpp"

namespace renewal {

enum class Scheme { length_biased, timeline, rejection };

std::string to_string(Scheme scheme);

/// Simulated inspections: the i-th observer lands at offset t[i] inside a
/// duration tau[i] and waits s[i] = tau[i] - t[i] for the next update.
struct RenewalSample {
  std::vector<double> tau;
  std::vector<double> t;
  std::vector<double> s;
  std::uint64_t seed = 0;
  Scheme scheme = Scheme::length_biased;

  // Rejection scheme: accepted / proposed, and the mean of every proposed τ.
  double acceptance_rate = 1.0;
  std::optional<double> proposal_mean_duration;

  std::vector<std::string> warnings;

  std::size_t size() const { return s.size(); }
  /// Throws NumericError unless 0 <= t <= tau and the columns line up.
  void check() const;
};

/// Stationary inspection with P_O = 1. Durations are drawn length-biased
/// (density τ P_W(τ) / E(τ)) and the offset uniformly inside the duration.
/// Falls back to the timeline scheme, with a warning, when the length-biased
/// envelope cannot be built.
RenewalSample sample_waiting_uniform(const DurationDistribution& d, std::size_t count, std::uint64_t seed,
                                     unsigned workers = 1);

/// Cross-check scheme: one long renewal path, inspected at sorted uniform
/// times after a burn-in of 50 E(τ). The horizon is E(τ) max(1000, 10 count)
/// so that few inspections share a duration.
RenewalSample sample_waiting_timeline(const DurationDistribution& d, std::size_t count, std::uint64_t seed);

/// Joint density ∝ P_O(t) P_W(τ) [t <= τ] by rejection. A pilot of 10^5
/// proposals aborts with NumericError when acceptance is below 1e-4.
RenewalSample sample_waiting_general(const DurationDistribution& d, const ObservationDistribution& o,
                                     std::size_t count, std::uint64_t seed, unsigned workers = 1);

inline constexpr double kMinAcceptance = 1e-4;
inline constexpr std::size_t kPilotProposals = 100000;

/// Moments of s with standard errors. For length-biased samples the duration
/// plug-in w = Σ τ^2 / 2 Σ τ is taken with 1/τ weights, i.e. mean(τ)/2, and
/// E(τ) is the harmonic mean of the sampled durations. Rejection samples
/// report the mean of proposed durations and leave δ undefined (NaN).
WaitingTimeAnalysis empirical_waiting_stats(const RenewalSample& r);

/// sup |F_n - F| over the samples, evaluated on both sides of each jump of F_n.
/// Throws DomainError if cdf leaves [0, 1] or decreases on the sample grid.
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);

}  // namespace renewal
