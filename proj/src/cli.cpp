#include "renewal/cli.hpp"

#include <CLI11.hpp>
#include <fmt/core.h>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "renewal/analytics.hpp"
#include "renewal/errors.hpp"
#include "renewal/fit.hpp"
#include "renewal/ratefilter.hpp"
#include "renewal/simulate.hpp"

namespace renewal::cli {

namespace {

using json = nlohmann::ordered_json;

std::string num(double x) { return fmt::format("{:.17g}", x); }

json num_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json opt_json(const std::optional<double>& x, double scale = 1.0) {
  return x && std::isfinite(*x) ? json(*x / scale) : json(nullptr);
}

struct TimeUnit {
  std::string name = "s";
  double seconds = 1.0;
};

TimeUnit parse_unit(const std::string& name) {
  if (name == "s") return {"s", 1.0};
  if (name == "min") return {"min", 60.0};
  throw DomainError(fmt::format("--time-unit must be s or min, got \"{}\"", name));
}

std::optional<double> to_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Files are staged in memory and written together once the command has
// finished, through a temporary name and a rename.
class Outputs {
 public:
  void add(const std::string& path, std::string content) { files_.emplace_back(path, std::move(content)); }

  void commit() {
    std::vector<std::string> temps;
    auto cleanup = [&] {
      std::error_code ec;
      for (const auto& t : temps) std::filesystem::remove(t, ec);
    };
    for (const auto& [path, content] : files_) {
      const std::string temp = path + ".partial";
      std::ofstream f(temp, std::ios::binary | std::ios::trunc);
      if (!f) {
        cleanup();
        throw IoError(fmt::format("cannot write {}", path));
      }
      temps.push_back(temp);
      f << content;
      f.close();
      if (!f) {
        cleanup();
        throw IoError(fmt::format("write to {} failed", path));
      }
    }
    for (std::size_t i = 0; i < files_.size(); ++i) {
      std::error_code ec;
      std::filesystem::rename(temps[i], files_[i].first, ec);
      if (ec) {
        cleanup();
        throw IoError(fmt::format("cannot move output into place at {}: {}", files_[i].first, ec.message()));
      }
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

// Rethrows with the stage name prefixed, keeping the error category.
template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const IoError& e) {
    throw IoError(fmt::format("stage {}: {}", name, e.what()));
  } catch (const NumericError& e) {
    throw NumericError(fmt::format("stage {}: {}", name, e.what()));
  } catch (const DomainError& e) {
    throw DomainError(fmt::format("stage {}: {}", name, e.what()));
  }
}

struct SpecParts {
  std::string name;
  std::map<std::string, std::string> params;
};

SpecParts split_spec(const std::string& spec) {
  SpecParts parts;
  const auto colon = spec.find(':');
  parts.name = spec.substr(0, colon);
  if (colon == std::string::npos) return parts;
  std::string_view rest(spec);
  rest.remove_prefix(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw DomainError(fmt::format("\"{}\": expected key=value, got \"{}\"", spec, item));
    }
    const std::string key(item.substr(0, eq));
    if (parts.params.count(key)) throw DomainError(fmt::format("\"{}\": parameter {} given twice", spec, key));
    parts.params[key] = std::string(item.substr(eq + 1));
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return parts;
}

void allow_only(const SpecParts& parts, const std::string& spec, std::initializer_list<const char*> keys) {
  for (const auto& [key, value] : parts.params) {
    bool known = false;
    std::string list;
    for (const char* k : keys) {
      known = known || key == k;
      list += list.empty() ? k : fmt::format(", {}", k);
    }
    if (!known) throw DomainError(fmt::format("\"{}\": unknown parameter {} (allowed: {})", spec, key, list));
  }
}

double param(const SpecParts& parts, const std::string& spec, const char* key) {
  const auto it = parts.params.find(key);
  if (it == parts.params.end()) throw DomainError(fmt::format("\"{}\": missing parameter {}", spec, key));
  const auto v = to_double(it->second);
  if (!v) throw DomainError(fmt::format("\"{}\": parameter {} is not a number: \"{}\"", spec, key, it->second));
  return *v;
}

std::string file_param(const SpecParts& parts, const std::string& spec) {
  const auto it = parts.params.find("file");
  if (it == parts.params.end() || it->second.empty()) {
    throw DomainError(fmt::format("\"{}\": missing parameter file", spec));
  }
  return it->second;
}

unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string units_comment(const TimeUnit& unit) {
  return fmt::format("# units: time in {}, prices in currency units\n", unit.name);
}

// Commands ---------------------------------------------------------------------------

struct Common {
  std::string format = "json";
  std::string out;
  std::string time_unit = "s";
  unsigned workers = default_workers();
};

void emit(const Common& c, Outputs& files, std::ostream& out, const std::string& content) {
  if (c.out.empty()) {
    out << content;
  } else {
    files.add(c.out, content);
  }
}

std::string analysis_csv(const json& j) {
  std::string s = "key,value\n";
  for (const auto& [key, value] : j.items()) {
    if (value.is_structured()) continue;
    s += fmt::format("{},{}\n", key, value.is_string() ? value.get<std::string>() : value.dump());
  }
  return s;
}

std::string render(const Common& c, const json& j) {
  if (c.format == "json") return j.dump(2) + "\n";
  return analysis_csv(j);
}

json analysis_json(const WaitingTimeAnalysis& a, const TimeUnit& u) {
  json j;
  j["method"] = to_string(a.method);
  j["time_unit"] = u.name;
  j["mean_wait"] = num_or_null(a.mean_wait / u.seconds);
  j["std_dev"] = num_or_null(a.std_dev / u.seconds);
  j["second_moment"] = num_or_null(a.second_moment / (u.seconds * u.seconds));
  j["mean_duration"] = num_or_null(a.mean_duration / u.seconds);
  j["paradox"] = a.paradox;
  return j;
}

void add_deltas(json& j, const WaitingTimeAnalysis& a) {
  j["delta1"] = num_or_null(a.delta[0]);
  j["delta2"] = num_or_null(a.delta[1]);
  j["delta3"] = num_or_null(a.delta[2]);
}

void add_monte_carlo(json& j, const WaitingTimeAnalysis& a, const TimeUnit& u) {
  j["count"] = a.count;
  j["mean_wait_stderr"] = opt_json(a.mean_wait_stderr, u.seconds);
  j["std_dev_stderr"] = opt_json(a.std_dev_stderr, u.seconds);
  j["plugin_mean_wait"] = opt_json(a.plugin_mean_wait, u.seconds);
}

int cmd_filter(const Common& c, const std::string& input, double epsilon, std::string durations_out,
               std::ostream& out) {
  const TimeUnit unit = parse_unit(c.time_unit);
  if (c.out.empty()) throw DomainError("filter: --out is required");
  if (durations_out.empty()) durations_out = c.out + ".durations.txt";
  if (!(epsilon > 0.0)) throw DomainError(fmt::format("--epsilon must be positive, got {}", epsilon));
  const TickSeries ticks = ingest_csv_file(input);
  const FilteredSeries filtered = first_exit_filter(ticks, epsilon);

  std::string csv = fmt::format("# first-exit filtered rate, epsilon = {}\n", num(epsilon));
  csv += "# units: timestamp in s, rate in currency units\ntimestamp,rate\n";
  for (const Tick& t : filtered.updates) csv += fmt::format("{},{}\n", num(t.time), num(t.price));
  std::string durations = "# durations between rate updates, s\n";
  for (double tau : filtered.durations) durations += num(tau) + "\n";

  json summary;
  summary["command"] = "filter";
  summary["ticks"] = ticks.ticks.size();
  summary["updates"] = filtered.updates.size();
  summary["time_unit"] = unit.name;
  const double span = ticks.ticks.back().time - ticks.ticks.front().time;
  summary["mean_tick_spacing"] =
      ticks.ticks.size() >= 2 ? json(span / static_cast<double>(ticks.ticks.size() - 1) / unit.seconds) : json(nullptr);
  summary["mean_duration"] =
      filtered.durations.empty() ? json(nullptr) : json(sample_raw_moment(filtered.durations, 1) / unit.seconds);
  summary["filtered_out"] = c.out;
  summary["durations_out"] = durations_out;

  Outputs files;
  files.add(c.out, std::move(csv));
  files.add(durations_out, std::move(durations));
  files.commit();
  out << render(c, summary);
  return ok;
}

int cmd_fit(const Common& c, const std::string& input, std::optional<std::size_t> bootstrap,
            std::optional<std::uint64_t> seed, std::ostream& out) {
  const TimeUnit unit = parse_unit(c.time_unit);
  if (bootstrap && !seed) throw DomainError("fit: --bootstrap needs --seed");
  const std::vector<double> taus = read_values_file(input);
  const FitResult f = fit_weibull(taus);
  const GoodnessOfFit gof = goodness_of_fit(taus, f);

  // a carries units of time^m.
  const double a_scale = std::pow(unit.seconds, f.m_hat);
  json j;
  j["command"] = "fit";
  j["input"] = input;
  j["time_unit"] = unit.name;
  j["n"] = f.n;
  j["m_hat"] = f.m_hat;
  j["a_hat"] = f.a_hat / a_scale;
  j["lambda_hat"] = weibull_lambda(f.m_hat, f.a_hat) / unit.seconds;
  j["log_likelihood"] = f.log_likelihood;
  j["m_stderr"] = num_or_null(f.m_stderr);
  j["a_stderr"] = num_or_null(f.a_stderr / a_scale);
  j["iterations"] = f.iterations;
  j["ks"] = gof.ks;
  j["ks_critical_1pct"] = gof.critical;
  j["ks_pass"] = gof.pass;
  if (bootstrap) {
    const BootstrapErrors b = bootstrap_weibull(taus, *bootstrap, *seed, c.workers);
    j["bootstrap_replicates"] = b.replicates;
    j["bootstrap_m_stderr"] = num_or_null(b.m_stderr);
    j["bootstrap_a_stderr"] = num_or_null(b.a_stderr / a_scale);
  }
  Outputs files;
  emit(c, files, out, render(c, j));
  files.commit();
  return ok;
}

std::string curve_csv(const OmegaCurve& curve, const std::string& title, const TimeUnit& unit) {
  std::string s = fmt::format("# waiting-time density {}\n", title);
  s += fmt::format("# units: s in {0}, omega in 1/{0}\n", unit.name);
  s += fmt::format("# mass beyond the last node: {}\n", num(curve.tail_mass));
  s += "s,omega\n";
  for (std::size_t i = 0; i < curve.s.size(); ++i) {
    s += fmt::format("{},{}\n", num(curve.s[i] / unit.seconds), num(curve.omega[i] * unit.seconds));
  }
  return s;
}

int cmd_analyze(const Common& c, const std::string& dist, const std::string& obs, std::string curve_path,
                std::size_t points, std::optional<double> s_max, std::ostream& out) {
  const TimeUnit unit = parse_unit(c.time_unit);
  if (points < 2) throw DomainError("--points must be at least 2");
  if (s_max && !(*s_max > 0.0)) throw DomainError("--s-max must be positive");
  if (curve_path.empty() && !c.out.empty()) curve_path = c.out + ".omega.csv";
  const DurationDistribution d = parse_duration_spec(dist);
  const ObservationDistribution o = parse_observation_spec(obs);

  const WaitingTimeAnalysis a = waiting_moments_general(d, o);
  const WaitingTimeDensity density(d, o);
  json j;
  j["command"] = "analyze";
  j["duration"] = d.describe();
  j["observation"] = o.describe();
  j.update(analysis_json(a, unit));
  add_deltas(j, a);
  j["omega_at_zero"] = density.pdf(0.0) * unit.seconds;

  Outputs files;
  if (!curve_path.empty()) {
    const OmegaCurve curve = omega_curve(density, points, s_max ? std::optional(*s_max * unit.seconds) : std::nullopt);
    j["curve_file"] = curve_path;
    j["curve_points"] = curve.s.size();
    j["curve_s_max"] = curve.s.back() / unit.seconds;
    j["curve_tail_mass"] = curve.tail_mass;
    files.add(curve_path, curve_csv(curve, fmt::format("for {} observed with {}", d.describe(), o.describe()), unit));
  }
  emit(c, files, out, render(c, j));
  files.commit();
  return ok;
}

int cmd_simulate(const Common& c, const std::string& dist, const std::string& obs, std::size_t count,
                 std::optional<std::uint64_t> seed, const std::string& scheme, std::string stats_out,
                 std::ostream& out) {
  const TimeUnit unit = parse_unit(c.time_unit);
  if (!seed) throw DomainError("simulate: --seed is required");
  if (count < 1) throw DomainError("--count must be at least 1");
  if (c.out.empty()) throw DomainError("simulate: --out is required");
  if (scheme != "length-biased" && scheme != "timeline") {
    throw DomainError(fmt::format("--scheme must be length-biased or timeline, got \"{}\"", scheme));
  }
  if (stats_out.empty()) stats_out = c.out + ".stats.json";
  const DurationDistribution d = parse_duration_spec(dist);
  const ObservationDistribution o = parse_observation_spec(obs);
  if (scheme == "timeline" && o.is_proper()) throw DomainError("--scheme timeline applies to --obs uniform only");

  RenewalSample r;
  if (o.is_uniform_improper()) {
    r = scheme == "timeline" ? sample_waiting_timeline(d, count, *seed)
                             : sample_waiting_uniform(d, count, *seed, c.workers);
  } else {
    r = sample_waiting_general(d, o, count, *seed, c.workers);
  }

  std::string csv = fmt::format("# waiting times for {} observed with {}, seed {}, scheme {}\n", d.describe(),
                                o.describe(), *seed, to_string(r.scheme));
  csv += units_comment(unit);
  csv += "tau,t,s\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    csv += fmt::format("{},{},{}\n", num(r.tau[i] / unit.seconds), num(r.t[i] / unit.seconds),
                       num(r.s[i] / unit.seconds));
  }

  json j;
  j["command"] = "simulate";
  j["duration"] = d.describe();
  j["observation"] = o.describe();
  j["seed"] = *seed;
  j["scheme"] = to_string(r.scheme);
  j["count"] = r.size();
  if (r.scheme == Scheme::rejection) j["acceptance_rate"] = r.acceptance_rate;
  j["warnings"] = r.warnings;
  const WaitingTimeAnalysis analytic = waiting_moments_general(d, o);
  json an = analysis_json(analytic, unit);
  j["analytic"] = {{"mean_wait", an["mean_wait"]}, {"std_dev", an["std_dev"]}, {"method", an["method"]}};
  if (r.size() >= 2) {
    const WaitingTimeAnalysis mc = empirical_waiting_stats(r);
    json m = analysis_json(mc, unit);
    add_monte_carlo(m, mc, unit);
    j["monte_carlo"] = m;
    double ks;
    const auto* w = std::get_if<Weibull>(&d.variant());
    if (w && o.is_uniform_improper()) {
      ks = ks_distance(r.s, [&](double s) { return s <= 0.0 ? 0.0 : weibull_closed_form::omega_cdf(w->m, w->a, s); });
    } else {
      const WaitingCdf cdf{WaitingTimeDensity(d, o)};
      ks = ks_distance(r.s, [&](double s) { return cdf(s); });
    }
    j["ks_distance"] = ks;
  } else {
    j["monte_carlo"] = nullptr;
    j["ks_distance"] = nullptr;
  }

  Outputs files;
  files.add(c.out, std::move(csv));
  files.add(stats_out, render(c, j));
  files.commit();
  out << fmt::format("wrote {} samples to {} and statistics to {}\n", r.size(), c.out, stats_out);
  return ok;
}

int cmd_paradox(const Common& c, const std::string& grid, double a, std::ostream& out) {
  const TimeUnit unit = parse_unit(c.time_unit);
  const std::vector<double> ms = parse_grid(grid);
  const auto rows = paradox_sweep(a, ms, c.workers);
  std::string content;
  if (c.format == "json") {
    json j;
    j["command"] = "paradox";
    j["a"] = a;
    j["time_unit"] = unit.name;
    j["sign_changes"] = sign_changes(rows);
    json list = json::array();
    for (const auto& r : rows) {
      list.push_back({{"m", r.m},
                      {"mean_duration", r.mean_duration / unit.seconds},
                      {"mean_wait", r.mean_wait / unit.seconds},
                      {"paradox", r.paradox}});
    }
    j["rows"] = list;
    content = j.dump(2) + "\n";
  } else {
    content = fmt::format("# inspection paradox sweep, Weibull a = {}\n", num(a));
    content += units_comment(unit);
    content += "m,mean_duration,mean_wait,paradox\n";
    for (const auto& r : rows) {
      content += fmt::format("{},{},{},{}\n", num(r.m), num(r.mean_duration / unit.seconds),
                             num(r.mean_wait / unit.seconds), r.paradox ? "true" : "false");
    }
  }
  Outputs files;
  emit(c, files, out, content);
  files.commit();
  return ok;
}

int cmd_pipeline(const Common& c, const std::string& input, double epsilon, std::optional<std::uint64_t> seed,
                 std::size_t count, const std::string& durations_out, std::ostream& out) {
  const TimeUnit unit = parse_unit(c.time_unit);
  if (!seed) throw DomainError("pipeline: --seed is required");
  if (!(epsilon > 0.0)) throw DomainError(fmt::format("--epsilon must be positive, got {}", epsilon));
  if (count < 2) throw DomainError("--count must be at least 2");

  const TickSeries ticks = stage("ingest", [&] { return ingest_csv_file(input); });
  const FilteredSeries filtered = stage("filter", [&] { return first_exit_filter(ticks, epsilon); });
  const std::vector<double> taus = stage("durations", [&] { return durations_of(filtered); });
  const FitResult f = stage("fit", [&] { return fit_weibull(taus); });
  const GoodnessOfFit gof = stage("fit", [&] { return goodness_of_fit(taus, f); });
  const WaitingTimeAnalysis analytic =
      stage("analytic", [&] { return waiting_moments_general(f.distribution(), ObservationDistribution::uniform_improper()); });
  const WaitingTimeAnalysis mc = stage("monte-carlo", [&] {
    return empirical_waiting_stats(sample_waiting_uniform(f.distribution(), count, *seed, c.workers));
  });
  const WaitingTimeAnalysis empirical = stage("empirical", [&] { return empirical_waiting_stats_from_durations(taus); });

  const double a_scale = std::pow(unit.seconds, f.m_hat);
  json j;
  j["command"] = "pipeline";
  j["input"] = input;
  j["epsilon"] = epsilon;
  j["seed"] = *seed;
  j["time_unit"] = unit.name;
  j["ticks"] = ticks.ticks.size();
  j["updates"] = filtered.updates.size();
  j["mean_duration"] = sample_raw_moment(taus, 1) / unit.seconds;
  j["fit"] = {{"n", f.n},
              {"m_hat", f.m_hat},
              {"a_hat", f.a_hat / a_scale},
              {"lambda_hat", weibull_lambda(f.m_hat, f.a_hat) / unit.seconds},
              {"m_stderr", num_or_null(f.m_stderr)},
              {"a_stderr", num_or_null(f.a_stderr / a_scale)},
              {"log_likelihood", f.log_likelihood},
              {"ks", gof.ks},
              {"ks_critical_1pct", gof.critical},
              {"ks_pass", gof.pass}};
  j["analytic"] = {{"mean_wait", analytic.mean_wait / unit.seconds}, {"std_dev", analytic.std_dev / unit.seconds}};
  json m = {{"mean_wait", mc.mean_wait / unit.seconds}, {"std_dev", mc.std_dev / unit.seconds}};
  add_monte_carlo(m, mc, unit);
  j["monte_carlo"] = m;
  j["empirical"] = {{"mean_wait", empirical.mean_wait / unit.seconds},
                    {"std_dev", num_or_null(empirical.std_dev / unit.seconds)},
                    {"diagnostics", empirical.diagnostics}};

  Outputs files;
  if (!durations_out.empty()) {
    std::string d = "# durations between rate updates, s\n";
    for (double tau : taus) d += num(tau) + "\n";
    files.add(durations_out, std::move(d));
  }
  emit(c, files, out, j.dump(2) + "\n");
  files.commit();
  return ok;
}

int cmd_synth(const Common& c, double step_std, double interval, std::size_t count, std::optional<std::uint64_t> seed,
              double start, std::ostream& out) {
  if (!seed) throw DomainError("synth: --seed is required");
  const TickSeries ticks = synth_ticks(step_std, interval, count, *seed, start);
  std::string csv = fmt::format("# synthetic ticks: Gaussian walk, step std {}, seed {}\n", num(step_std), *seed);
  csv += "# units: timestamp in s, price in currency units\ntimestamp,price\n";
  for (const Tick& t : ticks.ticks) csv += fmt::format("{},{}\n", num(t.time), num(t.price));
  Outputs files;
  emit(c, files, out, csv);
  files.commit();
  return ok;
}

void add_common(CLI::App* sub, Common& c, bool with_format = true) {
  if (with_format) sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--out", c.out, "Output path (stdout when omitted, where allowed)");
  sub->add_option("--time-unit", c.time_unit, "Display unit for times")->check(CLI::IsMember({"s", "min"}));
  sub->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

// Spec parsing ---------------------------------------------------------------------

std::vector<double> read_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open {}", path));
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view v(line);
    const auto first = v.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) continue;
    v.remove_prefix(first);
    v = v.substr(0, v.find_last_not_of(" \t\r") + 1);
    if (v.front() == '#') continue;
    const auto x = to_double(v);
    if (!x) throw DomainError(fmt::format("{}: row {}: not a number: \"{}\"", path, line_no, v));
    values.push_back(*x);
  }
  if (in.bad()) throw IoError(fmt::format("{}: read error", path));
  return values;
}

DurationDistribution parse_duration_spec(const std::string& spec) {
  const SpecParts p = split_spec(spec);
  if (p.name == "weibull") {
    allow_only(p, spec, {"m", "a", "lambda"});
    if (p.params.count("a") && p.params.count("lambda")) {
      throw DomainError(fmt::format("\"{}\": give a or lambda, not both", spec));
    }
    if (p.params.count("lambda")) {
      return DurationDistribution::weibull_conventional(param(p, spec, "m"), param(p, spec, "lambda"));
    }
    return DurationDistribution::weibull(param(p, spec, "m"), param(p, spec, "a"));
  }
  if (p.name == "exponential") {
    allow_only(p, spec, {"mean"});
    return DurationDistribution::exponential(param(p, spec, "mean"));
  }
  if (p.name == "gamma") {
    allow_only(p, spec, {"k", "theta"});
    return DurationDistribution::gamma(param(p, spec, "k"), param(p, spec, "theta"));
  }
  if (p.name == "empirical") {
    allow_only(p, spec, {"file"});
    return DurationDistribution::empirical(read_values_file(file_param(p, spec)));
  }
  throw DomainError(
      fmt::format("unknown duration law \"{}\" (expected weibull, exponential, gamma or empirical)", p.name));
}

ObservationDistribution parse_observation_spec(const std::string& spec) {
  const SpecParts p = split_spec(spec);
  if (p.name == "uniform") {
    allow_only(p, spec, {});
    return ObservationDistribution::uniform_improper();
  }
  if (p.name == "texp") {
    allow_only(p, spec, {"lambda"});
    return ObservationDistribution::truncated_exponential(param(p, spec, "lambda"));
  }
  if (p.name == "window") {
    allow_only(p, spec, {"p", "T"});
    return ObservationDistribution::power_window(param(p, spec, "p"), param(p, spec, "T"));
  }
  if (p.name == "empirical") {
    allow_only(p, spec, {"file"});
    return ObservationDistribution::empirical(read_values_file(file_param(p, spec)));
  }
  throw DomainError(
      fmt::format("unknown observation law \"{}\" (expected uniform, texp, window or empirical)", p.name));
}

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    std::vector<double> parts;
    std::string_view rest(spec);
    for (;;) {
      const auto colon = rest.find(':');
      const auto v = to_double(rest.substr(0, colon));
      if (!v) throw DomainError(fmt::format("--grid \"{}\": expected start:stop:step", spec));
      parts.push_back(*v);
      if (colon == std::string_view::npos) break;
      rest.remove_prefix(colon + 1);
    }
    if (parts.size() != 3) throw DomainError(fmt::format("--grid \"{}\": expected start:stop:step", spec));
    const double start = parts[0];
    const double stop = parts[1];
    const double step = parts[2];
    if (!(step > 0.0) || !(stop >= start)) {
      throw DomainError(fmt::format("--grid \"{}\": need step > 0 and stop >= start", spec));
    }
    const double span = (stop - start) / step;
    if (span > 1e7) throw DomainError(fmt::format("--grid \"{}\": too many points", spec));
    const auto n = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
    for (std::size_t i = 0; i < n; ++i) out.push_back(start + static_cast<double>(i) * step);
  } else {
    std::string_view rest(spec);
    for (;;) {
      const auto comma = rest.find(',');
      const auto v = to_double(rest.substr(0, comma));
      if (!v) throw DomainError(fmt::format("--grid \"{}\": bad value \"{}\"", spec, rest.substr(0, comma)));
      out.push_back(*v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }
  for (double m : out) {
    if (!(m > 0.0)) throw DomainError(fmt::format("--grid: shape values must be positive, got {}", m));
  }
  return out;
}

// Entry point --------------------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Waiting times of renewal processes: filtering, fitting, analysis and simulation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  Common common;
  std::string input;
  double epsilon = 0.0;
  std::string dist;
  std::string obs = "uniform";
  std::size_t count = 0;
  std::optional<std::uint64_t> seed;
  std::string grid = "0.3:3.0:0.05";
  double scale = 1.0;
  std::string curve;
  std::size_t points = 200;
  std::optional<double> s_max;
  std::string durations_out;
  std::string stats_out;
  std::string scheme = "length-biased";
  std::optional<std::size_t> bootstrap;
  double step_std = 0.03;
  double tick_interval = 1.0;
  double start_price = 100.0;

  auto* filter = app.add_subcommand("filter", "Apply the first-exit filter to a tick CSV");
  filter->add_option("--input", input, "Tick CSV (timestamp,price)")->required();
  filter->add_option("--epsilon", epsilon, "Threshold in currency units")->required();
  filter->add_option("--durations-out", durations_out, "Durations file (default <out>.durations.txt)");
  add_common(filter, common);

  auto* fit = app.add_subcommand("fit", "Weibull maximum-likelihood fit of a durations file");
  fit->add_option("--input", input, "Durations, one per line, seconds")->required();
  fit->add_option("--bootstrap", bootstrap, "Bootstrap replicates for standard errors");
  fit->add_option("--seed", seed, "Seed for the bootstrap");
  add_common(fit, common);

  auto* analyze = app.add_subcommand("analyze", "Waiting-time moments and density curve");
  analyze->add_option("--dist", dist, "Duration law")->required();
  analyze->add_option("--obs", obs, "Observation law");
  analyze->add_option("--curve", curve, "Density curve CSV (default <out>.omega.csv)");
  analyze->add_option("--points", points, "Curve nodes");
  analyze->add_option("--s-max", s_max, "Last curve node (default: tail mass 1e-6)");
  add_common(analyze, common);

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo waiting times");
  simulate->add_option("--dist", dist, "Duration law")->required();
  simulate->add_option("--obs", obs, "Observation law");
  simulate->add_option("--count", count, "Number of observers")->required();
  simulate->add_option("--seed", seed, "Random seed");
  simulate->add_option("--scheme", scheme, "length-biased or timeline (uniform observation)");
  simulate->add_option("--stats-out", stats_out, "Statistics file (default <out>.stats.json)");
  add_common(simulate, common);

  auto* paradox = app.add_subcommand("paradox", "Sweep the Weibull shape for the inspection paradox");
  paradox->add_option("--grid", grid, "start:stop:step or comma list of shapes");
  paradox->add_option("--scale", scale, "Weibull a");
  add_common(paradox, common);

  auto* pipeline = app.add_subcommand("pipeline", "Ticks to filter, fit, analytic, Monte Carlo and empirical");
  pipeline->add_option("--input", input, "Tick CSV")->required();
  pipeline->add_option("--epsilon", epsilon, "Threshold in currency units")->required();
  pipeline->add_option("--seed", seed, "Random seed");
  pipeline->add_option("--count", count, "Monte Carlo observers (default 100000)");
  pipeline->add_option("--durations-out", durations_out, "Also write the durations");
  add_common(pipeline, common, false);

  auto* synth = app.add_subcommand("synth", "Synthetic tick series (Gaussian walk)");
  synth->add_option("--step-std", step_std, "Step standard deviation");
  synth->add_option("--tick-interval", tick_interval, "Seconds between ticks");
  synth->add_option("--count", count, "Number of ticks")->required();
  synth->add_option("--seed", seed, "Random seed");
  synth->add_option("--start-price", start_price, "First price");
  add_common(synth, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? ok : validation;
  }
  if (paradox->parsed() && paradox->count("--format") == 0) common.format = "csv";

  try {
    if (filter->parsed()) return cmd_filter(common, input, epsilon, durations_out, out);
    if (fit->parsed()) return cmd_fit(common, input, bootstrap, seed, out);
    if (analyze->parsed()) return cmd_analyze(common, dist, obs, curve, points, s_max, out);
    if (simulate->parsed()) return cmd_simulate(common, dist, obs, count, seed, scheme, stats_out, out);
    if (paradox->parsed()) return cmd_paradox(common, grid, scale, out);
    if (pipeline->parsed()) {
      return cmd_pipeline(common, input, epsilon, seed, pipeline->count("--count") ? count : 100000, durations_out,
                          out);
    }
    if (synth->parsed()) return cmd_synth(common, step_std, tick_interval, count, seed, start_price, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return io;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return numeric;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << "\n";
    return validation;
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return numeric;
  }
  return validation;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace renewal::cli
