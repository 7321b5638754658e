#pragma once

// The sdfields command line: subcommands simulate, orlicz, sd-check, fubini,
// field-process and cumulant. Every report embeds the resolved configuration,
// and `--replay report.json` re-runs it.
//
// Exit codes: 0 on success, 2 when a check subcommand finds a violation,
// 1 on errors.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sdfields/config.hpp"

namespace sdfields::cli {

/// Everything that determines a run's results. Output locations, the thread
/// count and the stdout format do not change results and are kept out of the
/// serialized form.
struct RunConfig {
  std::string subcommand;
  std::uint64_t seed = kDefaultSeed;
  std::int64_t replicas = 1;
  /// Thresholds of the check subcommands by name.
  json tolerances = json::object();
  /// Input documents by role (basis, kernel, grid, mu, sets, spec).
  json inputs = json::object();
  /// Subcommand parameters.
  json options = json::object();

  std::string out;
  std::string report;
  int threads = 1;
  bool json_stdout = false;

  json to_json() const;
  /// Reads the "config" object of a report; throws ConfigParse.
  static RunConfig from_json(const json& j);
};

/// Writes `content` to a temporary file next to `path` and renames it into place.
void write_atomic(const std::string& path, const std::string& content);

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
/// Entry point for main().
int run(int argc, const char* const* argv);

}  // namespace sdfields::cli
