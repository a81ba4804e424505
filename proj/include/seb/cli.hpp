#pragma once

#include <iosfwd>

namespace seb {

// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitMissingInput = 3,
  kExitCheckpointMismatch = 4,
  kExitGradAudit = 5,
};

// Entry point of the `seb` tool; returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace seb
