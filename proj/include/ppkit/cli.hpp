#pragma once

#include <ostream>

namespace ppkit {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,
    kExitUsage = 2,
    kExitIncompatible = 3,
};

/// Entry point of the `ppkit` tool. Errors are reported on `err` as a single
/// JSON line {"error": ..., "exit_code": ...}.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ppkit
