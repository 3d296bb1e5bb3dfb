#include "renewal/simulate.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "renewal/errors.hpp"
#include "renewal/rng.hpp"

namespace renewal {

namespace {

// Tail weight below which the last length-biased bucket is closed off.
constexpr double kTailWeight = 1e-17;
constexpr int kMaxBuckets = 1100;

// Exact length-biased draws. The τ-axis is cut into [0, median] and doubling
// buckets above it; bucket k is picked with weight ∫ τ dP_W over the bucket,
// τ is drawn from P_W conditioned on the bucket and kept with probability
// τ / hi. Doubling keeps the acceptance above 1/2 outside the first bucket.
class LengthBiasedSampler {
 public:
  explicit LengthBiasedSampler(const DurationDistribution& d) : d_(d) {
    if (d.is_empirical()) {
      const auto& taus = d.empirical_samples();
      cumulative_.reserve(taus.size());
      double sum = 0.0;
      for (double tau : taus) cumulative_.push_back(sum += tau);
      return;
    }
    const double mean = d.mean();
    if (!std::isfinite(mean) || !(mean > 0.0)) throw NumericError("length-biased envelope: E(τ) is not finite");
    edges_ = {0.0, d.inverse_survival(0.5)};
    while (d.partial_first_moment(edges_.back(), std::numeric_limits<double>::infinity()) > kTailWeight * mean) {
      if (static_cast<int>(edges_.size()) > kMaxBuckets || !std::isfinite(2.0 * edges_.back())) {
        throw NumericError("length-biased envelope: tail weight does not decay");
      }
      edges_.push_back(2.0 * edges_.back());
    }
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < edges_.size(); ++k) {
      const double w = d.partial_first_moment(edges_[k], edges_[k + 1]);
      if (!(w >= 0.0) || !std::isfinite(w)) throw NumericError("length-biased envelope: bad bucket weight");
      cumulative_.push_back(sum += w);
      survival_.push_back(d.survival(edges_[k]));
    }
    survival_.push_back(d.survival(edges_.back()));
  }

  double draw(Rng& rng) const {
    if (d_.is_empirical()) {
      const auto& taus = d_.empirical_samples();
      const double target = rng.uniform() * cumulative_.back();
      const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
      return taus[std::min<std::size_t>(it - cumulative_.begin(), taus.size() - 1)];
    }
    const double target = rng.uniform() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    const auto k = std::min<std::size_t>(it - cumulative_.begin(), cumulative_.size() - 1);
    const double lo = edges_[k];
    const double hi = edges_[k + 1];
    // The retry stays inside bucket k; re-picking would favour buckets with high acceptance.
    for (;;) {
      const double q = survival_[k] - rng.open_uniform() * (survival_[k] - survival_[k + 1]);
      const double tau = std::clamp(d_.inverse_survival(q), lo, hi);
      if (rng.uniform() * hi < tau) return tau;
    }
  }

 private:
  const DurationDistribution& d_;
  std::vector<double> edges_;
  std::vector<double> survival_;
  std::vector<double> cumulative_;
};

struct ShardTally {
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  double proposed_tau_sum = 0.0;
};

// Fills r.tau / r.t shard by shard; draw(rng, tally) returns one (τ, t) pair.
template <typename Draw>
std::vector<ShardTally> fill_pairs(RenewalSample& r, std::size_t count, std::uint64_t seed, StreamRole role,
                                   unsigned workers, Draw draw) {
  r.tau.assign(count, 0.0);
  r.t.assign(count, 0.0);
  const std::size_t shards = (count + kShardSize - 1) / kShardSize;
  std::vector<ShardTally> tallies(shards);
  for_each_shard(shards, workers, [&](std::size_t i) {
    Rng rng(seed, stream_id(role, i));
    const std::size_t begin = i * kShardSize;
    const std::size_t end = std::min(count, begin + kShardSize);
    for (std::size_t j = begin; j < end; ++j) {
      const auto [tau, t] = draw(rng, tallies[i]);
      r.tau[j] = tau;
      r.t[j] = t;
    }
  });
  r.s.resize(count);
  for (std::size_t j = 0; j < count; ++j) r.s[j] = r.tau[j] - r.t[j];
  return tallies;
}

void require_count(std::size_t count, const char* what) {
  if (count < 1) throw DomainError(fmt::format("{}: count must be at least 1", what));
}

}  // namespace

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::length_biased:
      return "length-biased";
    case Scheme::timeline:
      return "timeline";
    case Scheme::rejection:
      return "rejection";
  }
  return "unknown";
}

void RenewalSample::check() const {
  if (tau.size() != t.size() || tau.size() != s.size()) {
    throw NumericError("renewal sample columns have different lengths");
  }
  for (std::size_t i = 0; i < tau.size(); ++i) {
    if (!(t[i] >= 0.0) || !(t[i] <= tau[i]) || !(s[i] >= 0.0)) {
      throw NumericError(fmt::format("renewal sample row {} violates 0 <= t <= tau (tau={}, t={})", i, tau[i], t[i]));
    }
  }
}

RenewalSample sample_waiting_uniform(const DurationDistribution& d, std::size_t count, std::uint64_t seed,
                                     unsigned workers) {
  require_count(count, "sample_waiting_uniform");
  std::optional<LengthBiasedSampler> sampler;
  std::string failure;
  try {
    sampler.emplace(d);
  } catch (const NumericError& e) {
    failure = e.what();
  }
  if (!sampler) {
    RenewalSample r = sample_waiting_timeline(d, count, seed);
    r.warnings.push_back(fmt::format("length-biased sampling unavailable ({}); used the timeline scheme", failure));
    return r;
  }
  RenewalSample r;
  r.seed = seed;
  r.scheme = Scheme::length_biased;
  fill_pairs(r, count, seed, StreamRole::durations, workers, [&](Rng& rng, ShardTally&) {
    const double tau = sampler->draw(rng);
    return std::pair{tau, rng.uniform() * tau};
  });
  r.check();
  return r;
}

RenewalSample sample_waiting_timeline(const DurationDistribution& d, std::size_t count, std::uint64_t seed) {
  require_count(count, "sample_waiting_timeline");
  const double mean = d.mean();
  const double burn_in = 50.0 * mean;
  const double span = mean * std::max(1000.0, 10.0 * static_cast<double>(count));

  std::vector<double> inspections(count);
  Rng inspect_rng(seed, stream_id(StreamRole::inspections, 0));
  for (double& x : inspections) x = burn_in + span * inspect_rng.uniform();
  std::sort(inspections.begin(), inspections.end());

  RenewalSample r;
  r.seed = seed;
  r.scheme = Scheme::timeline;
  r.tau.reserve(count);
  r.t.reserve(count);
  r.s.reserve(count);
  Rng rng(seed, stream_id(StreamRole::durations, 0));
  double epoch = 0.0;
  std::size_t next = 0;
  while (next < count) {
    const double tau = d.draw(rng);
    const double end = epoch + tau;
    while (next < count && inspections[next] < end) {
      const double t = std::clamp(inspections[next] - epoch, 0.0, tau);
      r.tau.push_back(tau);
      r.t.push_back(t);
      r.s.push_back(tau - t);
      ++next;
    }
    epoch = end;
  }
  r.check();
  return r;
}

RenewalSample sample_waiting_general(const DurationDistribution& d, const ObservationDistribution& o,
                                     std::size_t count, std::uint64_t seed, unsigned workers) {
  require_count(count, "sample_waiting_general");
  if (o.is_uniform_improper()) {
    throw DomainError("sample_waiting_general needs a proper observation law; use sample_waiting_uniform");
  }
  Rng pilot(seed, stream_id(StreamRole::pilot, 0));
  std::size_t pilot_accepted = 0;
  for (std::size_t i = 0; i < kPilotProposals; ++i) {
    const double tau = d.draw(pilot);
    if (o.draw(pilot) <= tau) ++pilot_accepted;
  }
  const double pilot_rate = static_cast<double>(pilot_accepted) / static_cast<double>(kPilotProposals);
  if (pilot_rate < kMinAcceptance) {
    throw NumericError(fmt::format(
        "rejection sampling aborted: pilot acceptance {:.3g} < {:.0e} over {} proposals; the supports of {} and {} "
        "barely overlap",
        pilot_rate, kMinAcceptance, kPilotProposals, d.describe(), o.describe()));
  }

  RenewalSample r;
  r.seed = seed;
  r.scheme = Scheme::rejection;
  const auto tallies = fill_pairs(r, count, seed, StreamRole::observations, workers, [&](Rng& rng, ShardTally& tally) {
    for (;;) {
      const double tau = d.draw(rng);
      const double t = o.draw(rng);
      ++tally.proposed;
      tally.proposed_tau_sum += tau;
      if (t <= tau) {
        ++tally.accepted;
        return std::pair{tau, t};
      }
    }
  });
  ShardTally total;
  for (const ShardTally& s : tallies) {
    total.proposed += s.proposed;
    total.accepted += s.accepted;
    total.proposed_tau_sum += s.proposed_tau_sum;
  }
  r.acceptance_rate = static_cast<double>(total.accepted) / static_cast<double>(total.proposed);
  r.proposal_mean_duration = total.proposed_tau_sum / static_cast<double>(total.proposed);
  r.check();
  return r;
}

WaitingTimeAnalysis empirical_waiting_stats(const RenewalSample& r) {
  const std::size_t n = r.size();
  if (n < 2) throw DomainError("empirical_waiting_stats: need at least 2 samples");
  const auto nd = static_cast<double>(n);

  double mean = 0.0;
  for (double s : r.s) mean += s;
  mean /= nd;
  double c2 = 0.0;
  double c4 = 0.0;
  double raw2 = 0.0;
  for (double s : r.s) {
    const double dev = s - mean;
    c2 += dev * dev;
    c4 += dev * dev * dev * dev;
    raw2 += s * s;
  }
  const double variance = c2 / (nd - 1.0);
  const double central4 = c4 / nd;

  WaitingTimeAnalysis out;
  out.method = Method::monte_carlo;
  out.count = n;
  out.mean_wait = mean;
  out.second_moment = raw2 / nd;
  out.std_dev = std::sqrt(variance);
  out.mean_wait_stderr = std::sqrt(variance / nd);
  out.std_dev_stderr =
      variance > 0.0 ? std::sqrt(std::max(0.0, central4 - variance * variance) / (4.0 * variance * nd)) : 0.0;

  if (r.scheme == Scheme::rejection) {
    out.mean_duration = r.proposal_mean_duration.value_or(std::numeric_limits<double>::quiet_NaN());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.delta = {nan, nan, nan};
  } else {
    double tau_sum = 0.0;
    double inverse_sum = 0.0;
    for (double tau : r.tau) {
      tau_sum += tau;
      inverse_sum += 1.0 / tau;
    }
    out.mean_duration = nd / inverse_sum;
    out.plugin_mean_wait = tau_sum / (2.0 * nd);
    out.delta = {0.0, 0.0, 0.0};
  }
  out.paradox = out.mean_wait > out.mean_duration;
  return out;
}

double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.size() < 2) throw DomainError("ks_distance: need at least 2 samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  for (double x : sorted) {
    if (std::isnan(x)) throw DomainError("ks_distance: sample is NaN");
  }
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  constexpr double kSlack = 1e-12;
  auto probe = [&](double x) {
    const double f = cdf(x);
    if (!(f >= -kSlack && f <= 1.0 + kSlack)) {
      throw DomainError(fmt::format("ks_distance: cdf({}) = {} is outside [0, 1]", x, f));
    }
    return f;
  };
  double distance = 0.0;
  double previous = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    const double v = sorted[i];
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == v) ++j;
    const double below = probe(std::nextafter(v, -std::numeric_limits<double>::infinity()));
    const double at = probe(v);
    if (below < previous - kSlack || at < below - kSlack) {
      throw DomainError(fmt::format("ks_distance: cdf is not monotone near {}", v));
    }
    distance = std::max({distance, std::abs(static_cast<double>(i) / n - below),
                         std::abs(static_cast<double>(j) / n - at)});
    previous = at;
    i = j;
  }
  return std::min(1.0, distance);
}

}  // namespace renewal
