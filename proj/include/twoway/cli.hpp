#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "twoway/neyman.hpp"
#include "twoway/simulation.hpp"

namespace twoway::cli {

/// Fully resolved settings of one invocation.
struct RunConfig {
  std::string command;  // estimate | mc | spectrum | simulate
  std::filesystem::path input;
  std::filesystem::path out = ".";

  EstimatorId estimator = EstimatorId::Ww;
  EstimatorConfig est;
  double level = 0.95;

  DgpSpec dgp;
  Index rounds = 100;
  std::vector<EstimatorId> estimators{EstimatorId::Oracle, EstimatorId::Factor, EstimatorId::Ww};
  std::vector<std::pair<Index, Index>> dims{{100, 100}};
  std::uint64_t seed = 1;
  int threads = 1;

  std::string spectrum_of = "y";  // y | x<k> | ols_residual
  Index r_max = 10;
  std::filesystem::path config_file;
};

/// Reads `key = value` lines ('#' starts a comment). Keys are long flag names
/// without the leading dashes.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path);

/// args excludes the program name. Values in a --config file are applied
/// first, so command-line flags override them. Throws Error{UnknownFlag,
/// BadValue, Io}; `help` is set when --help was requested.
RunConfig parse_config(const std::vector<std::string>& args, std::string* help = nullptr);

/// One `key=value` line per resolved setting, including rate defaults.
std::string describe(const RunConfig& cfg);

/// Runs the subcommand; human-readable output goes to `out`, log lines to `log`.
void run(const RunConfig& cfg, std::ostream& out, std::ostream& log);

/// Exit status for an error code: 2 config, 3 numerical, 4 I/O.
int exit_code(ErrorCode code);

/// argv front end: parse, log, run, map errors to exit codes.
int main(int argc, char** argv);

}  // namespace twoway::cli
