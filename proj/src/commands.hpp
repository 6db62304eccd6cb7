#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"
#include "error.hpp"

namespace edp {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  // I/O, lock contention, internal errors
  kExitNonConvergence = 2,
  kExitValidation = 3,
  kExitBlowUp = 4,
};

int exit_code_for(ErrorKind kind);

inline constexpr int kSummarySchemaVersion = 1;

const std::vector<std::string>& command_names();

struct CommandOptions {
  std::string out_dir;    // overrides cfg.out_dir when nonempty
  std::string init_path;  // evolve / norms: optional snapshot input
  bool quiet = false;
};

/// Runs one command and writes its outputs (CSV tables, snapshots,
/// summary.json, timings.json) into the output directory. summary.json is
/// written on every path, including failures, and contains no timings so it
/// is byte-identical across repeated runs. Progress goes to `log` unless quiet.
int run_command(const std::string& command, const SolverConfig& cfg, const CommandOptions& options,
                std::ostream& log);

/// Full CLI entry: loads the config (defaults when config_path is empty),
/// maps every failure onto an exit code and still writes a summary.
int run_command_from_file(const std::string& command, const std::string& config_path,
                          const CommandOptions& options, std::ostream& log);

}  // namespace edp
