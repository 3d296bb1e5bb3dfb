#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "renewal/distributions.hpp"

namespace renewal::cli {

enum ExitCode : int { ok = 0, validation = 2, numeric = 3, io = 4 };

/// Runs the command line; argv[0] is the program name. All output files are
/// written only after every stage has succeeded.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// weibull:m=..,a=.. (or m=..,lambda=..) | exponential:mean=.. | gamma:k=..,theta=..
/// | empirical:file=..
DurationDistribution parse_duration_spec(const std::string& spec);
/// uniform | texp:lambda=.. | window:p=..,T=.. | empirical:file=..
ObservationDistribution parse_observation_spec(const std::string& spec);
/// "start:stop:step" (inclusive) or a comma-separated list.
std::vector<double> parse_grid(const std::string& spec);

/// One value per line; blank lines and '#' comments are skipped.
std::vector<double> read_values_file(const std::string& path);

}  // namespace renewal::cli
