#include "renewal/ratefilter.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>

#include "renewal/rng.hpp"

namespace renewal {

void TickSeries::validate() const {
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    if (!(ticks[i].price > 0.0) || !std::isfinite(ticks[i].price)) {
      throw DomainError(fmt::format("tick {}: price {} is not positive", i, ticks[i].price));
    }
    if (!std::isfinite(ticks[i].time)) throw DomainError(fmt::format("tick {}: timestamp is not finite", i));
    if (i > 0 && !(ticks[i].time > ticks[i - 1].time)) {
      throw DomainError(fmt::format("tick {}: timestamp {} does not increase", i, ticks[i].time));
    }
  }
}

double threshold_slack(double price, double reference) {
  return 64.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(price), std::abs(reference));
}

FilteredSeries first_exit_filter(const TickSeries& ticks, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw DomainError(fmt::format("epsilon must be positive, got {}", epsilon));
  }
  if (ticks.ticks.empty()) throw DomainError("cannot filter an empty tick series");
  ticks.validate();

  FilteredSeries out;
  out.epsilon = epsilon;
  out.updates.push_back(ticks.ticks.front());
  double reference = ticks.ticks.front().price;
  for (std::size_t i = 1; i < ticks.ticks.size(); ++i) {
    const Tick& tick = ticks.ticks[i];
    if (std::abs(tick.price - reference) >= epsilon - threshold_slack(tick.price, reference)) {
      out.updates.push_back(tick);
      reference = tick.price;
    }
  }
  for (std::size_t i = 1; i < out.updates.size(); ++i) {
    out.durations.push_back(out.updates[i].time - out.updates[i - 1].time);
  }
  return out;
}

std::vector<double> durations_of(const FilteredSeries& filtered) {
  if (filtered.updates.size() < 2) {
    throw DomainError(fmt::format("need at least 2 updates to form a duration, got {}", filtered.updates.size()));
  }
  std::vector<double> out;
  out.reserve(filtered.updates.size() - 1);
  for (std::size_t i = 1; i < filtered.updates.size(); ++i) {
    const double tau = filtered.updates[i].time - filtered.updates[i - 1].time;
    if (!(tau > 0.0)) throw DomainError(fmt::format("update {}: duration {} is not positive", i, tau));
    out.push_back(tau);
  }
  return out;
}

TickSeries synth_ticks(double step_std, double tick_interval, std::size_t count, std::uint64_t seed,
                       double start_price) {
  if (!(step_std >= 0.0) || !std::isfinite(step_std)) throw DomainError("step_std must be non-negative");
  if (!(tick_interval > 0.0) || !std::isfinite(tick_interval)) throw DomainError("tick_interval must be positive");
  if (!(start_price > 0.0) || !std::isfinite(start_price)) throw DomainError("start_price must be positive");
  if (count < 1) throw DomainError("tick count must be at least 1");

  std::vector<double> steps(count - 1);
  fill_sharded(steps, seed, StreamRole::ticks, 1, [&](Rng& rng, std::span<double> chunk) {
    for (double& x : chunk) x = step_std * rng.normal();
  });
  TickSeries out;
  out.ticks.reserve(count);
  double price = start_price;
  out.ticks.push_back({0.0, price});
  for (std::size_t i = 1; i < count; ++i) {
    price += steps[i - 1];
    if (!(price > 0.0)) {
      throw DomainError(fmt::format("synthetic walk reached a non-positive price at tick {}; raise start_price", i));
    }
    out.ticks.push_back({static_cast<double>(i) * tick_interval, price});
  }
  return out;
}

// CSV ingestion ----------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

bool read_digits(std::string_view& s, std::size_t count, int& value) {
  if (s.size() < count) return false;
  value = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    value = value * 10 + (s[i] - '0');
  }
  s.remove_prefix(count);
  return true;
}

bool expect(std::string_view& s, char c) {
  if (s.empty() || s.front() != c) return false;
  s.remove_prefix(1);
  return true;
}

// Days from 1970-01-01 to the given proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

enum class TimeFormat { unknown, numeric, iso };

std::vector<std::string_view> split_fields(std::string_view row) {
  std::vector<std::string_view> fields;
  for (;;) {
    const auto comma = row.find(',');
    fields.push_back(trim(row.substr(0, comma)));
    if (comma == std::string_view::npos) return fields;
    row.remove_prefix(comma + 1);
  }
}

}  // namespace

std::optional<double> parse_iso8601(std::string_view s) {
  int year = 0;
  int month = 0;
  int day = 0;
  int hour = 0;
  int minute = 0;
  int second = 0;
  if (!read_digits(s, 4, year) || !expect(s, '-') || !read_digits(s, 2, month) || !expect(s, '-') ||
      !read_digits(s, 2, day)) {
    return std::nullopt;
  }
  if (s.empty() || (s.front() != 'T' && s.front() != ' ')) return std::nullopt;
  s.remove_prefix(1);
  if (!read_digits(s, 2, hour) || !expect(s, ':') || !read_digits(s, 2, minute) || !expect(s, ':') ||
      !read_digits(s, 2, second)) {
    return std::nullopt;
  }
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (month < 1 || month > 12 || day < 1) return std::nullopt;
  if (day > kDays[month - 1] + (month == 2 && leap(year) ? 1 : 0)) return std::nullopt;
  if (hour > 23 || minute > 59 || second > 60) return std::nullopt;

  double fraction = 0.0;
  if (!s.empty() && s.front() == '.') {
    s.remove_prefix(1);
    double place = 0.1;
    std::size_t digits = 0;
    while (!s.empty() && s.front() >= '0' && s.front() <= '9') {
      fraction += place * (s.front() - '0');
      place /= 10.0;
      s.remove_prefix(1);
      ++digits;
    }
    if (digits == 0) return std::nullopt;
  }
  int offset = 0;
  if (!s.empty()) {
    if (s == "Z") {
      s.remove_prefix(1);
    } else if (s.front() == '+' || s.front() == '-') {
      const int sign = s.front() == '+' ? 1 : -1;
      s.remove_prefix(1);
      int oh = 0;
      int om = 0;
      if (!read_digits(s, 2, oh)) return std::nullopt;
      if (!s.empty()) {
        expect(s, ':');
        if (!read_digits(s, 2, om)) return std::nullopt;
      }
      if (oh > 23 || om > 59) return std::nullopt;
      offset = sign * (oh * 3600 + om * 60);
    }
  }
  if (!s.empty()) return std::nullopt;
  const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
  const std::int64_t whole = days * 86400 + hour * 3600 + minute * 60 + second - offset;
  return static_cast<double>(whole) + fraction;
}

namespace {

bool looks_like_header(const std::vector<std::string_view>& fields) {
  return std::none_of(fields.begin(), fields.end(),
                      [](std::string_view f) { return parse_number(f) || parse_iso8601(f); });
}

}  // namespace

TickSeries ingest_csv(std::istream& in, const std::string& source) {
  TickSeries out;
  TimeFormat format = TimeFormat::unknown;
  std::string line;
  std::size_t line_no = 0;
  bool seen_row = false;
  auto fail = [&](CsvError::Kind kind, const std::string& msg) {
    throw CsvError(kind, line_no, fmt::format("{}: row {}: {}", source, line_no, msg));
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty() || row.front() == '#') continue;
    const auto fields = split_fields(row);
    if (!seen_row) {
      seen_row = true;
      if (looks_like_header(fields)) continue;
    }
    if (fields.size() != 2) fail(CsvError::Kind::malformed, "expected exactly two fields \"timestamp,price\"");
    const std::string_view time_field = fields[0];
    const std::string_view price_field = fields[1];
    const auto price = parse_number(price_field);
    if (!price || !std::isfinite(*price)) fail(CsvError::Kind::malformed, fmt::format("bad price \"{}\"", price_field));

    std::optional<double> time;
    TimeFormat row_format = TimeFormat::unknown;
    if ((time = parse_number(time_field))) {
      row_format = TimeFormat::numeric;
      if (!std::isfinite(*time) || *time < 0.0) {
        fail(CsvError::Kind::malformed, fmt::format("timestamp \"{}\" is not a non-negative number", time_field));
      }
    } else if ((time = parse_iso8601(time_field))) {
      row_format = TimeFormat::iso;
    } else {
      fail(CsvError::Kind::malformed, fmt::format("bad timestamp \"{}\"", time_field));
    }
    if (format == TimeFormat::unknown) format = row_format;
    if (row_format != format) fail(CsvError::Kind::malformed, "numeric and ISO-8601 timestamps are mixed");
    if (!(*price > 0.0)) fail(CsvError::Kind::non_positive_price, fmt::format("price {} is not positive", *price));
    if (!out.ticks.empty() && !(*time > out.ticks.back().time)) {
      fail(CsvError::Kind::non_increasing,
           fmt::format("timestamp {} does not increase (previous {})", time_field, out.ticks.back().time));
    }
    out.ticks.push_back({*time, *price});
  }
  if (in.bad()) throw IoError(fmt::format("{}: read error", source));
  if (out.ticks.empty()) {
    throw CsvError(CsvError::Kind::empty, line_no, fmt::format("{}: no ticks", source));
  }
  return out;
}

TickSeries ingest_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open {}", path));
  return ingest_csv(in, path);
}

}  // namespace renewal
