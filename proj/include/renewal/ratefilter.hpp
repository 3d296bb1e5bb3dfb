#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "renewal/errors.hpp"

namespace renewal {

struct Tick {
  double time;   // seconds
  double price;  // currency units
};

/// Strictly increasing timestamps, positive prices.
struct TickSeries {
  std::vector<Tick> ticks;

  /// Throws DomainError naming the first offending index.
  void validate() const;
};

/// Published rate: the market price is re-published only when it moves at
/// least epsilon away from the last published rate. The first tick is
/// update 0.
struct FilteredSeries {
  std::vector<Tick> updates;
  double epsilon = 0.0;
  std::vector<double> durations;  // consecutive update-time differences
};

/// Prices closer than this to the threshold count as reaching it, so that
/// 100.10 - 100.00 fires for epsilon = 0.1 despite binary rounding.
double threshold_slack(double price, double reference);

FilteredSeries first_exit_filter(const TickSeries& ticks, double epsilon);

/// Throws DomainError with fewer than 2 updates.
std::vector<double> durations_of(const FilteredSeries& filtered);

/// Gaussian random walk on an even time grid, starting at start_price.
/// step_std = 0 gives a constant series. Throws DomainError if the walk
/// reaches a non-positive price.
TickSeries synth_ticks(double step_std, double tick_interval, std::size_t count, std::uint64_t seed,
                       double start_price);

/// Ingestion failure; `line` is the 1-based physical line in the source.
class CsvError : public DomainError {
 public:
  enum class Kind { malformed, non_increasing, non_positive_price, empty };

  CsvError(Kind kind, std::size_t line, const std::string& what) : DomainError(what), kind_(kind), line_(line) {}

  Kind kind() const { return kind_; }
  std::size_t line() const { return line_; }

 private:
  Kind kind_;
  std::size_t line_;
};

/// Rows "timestamp,price" with an optional header; '#' lines and blank lines
/// are skipped. Timestamps are decimal seconds or ISO-8601 (UTC unless an
/// offset is given), one format per file.
TickSeries ingest_csv(std::istream& in, const std::string& source = "<stream>");
/// Throws IoError if the file cannot be opened.
TickSeries ingest_csv_file(const std::string& path);

/// Seconds since 1970-01-01T00:00:00Z; nullopt if `text` is not ISO-8601.
std::optional<double> parse_iso8601(std::string_view text);

}  // namespace renewal
