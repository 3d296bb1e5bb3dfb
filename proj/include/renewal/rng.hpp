#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>

namespace renewal {

/// Deterministic generator for one (seed, stream) pair. Distinct streams of
/// the same seed are seeded independently through std::seed_seq, so shards
/// of a Monte Carlo run can be drawn in any order or in parallel.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1); never returns an endpoint.
  double open_uniform();
  /// Standard normal (Box-Muller).
  double normal();
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n);

 private:
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// Stream namespaces so that different roles in one run never share draws.
enum class StreamRole : std::uint64_t {
  durations = 1,
  offsets = 2,
  observations = 3,
  pilot = 4,
  ticks = 5,
  inspections = 6,
  bootstrap = 7,
};

inline constexpr std::size_t kShardSize = std::size_t{1} << 16;

/// Fills `out` shard by shard; shard i draws from Rng(seed, role * 2^32 + i).
/// The result is bit-identical for any worker count.
void fill_sharded(std::span<double> out, std::uint64_t seed, StreamRole role, unsigned workers,
                  const std::function<void(Rng&, std::span<double>)>& fill);

/// Runs body(shard_index) for each shard on up to `workers` threads.
void for_each_shard(std::size_t shard_count, unsigned workers,
                    const std::function<void(std::size_t)>& body);

std::uint64_t stream_id(StreamRole role, std::uint64_t index);

}  // namespace renewal
