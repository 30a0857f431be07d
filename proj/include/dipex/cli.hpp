#pragma once

#include <iosfwd>

namespace dipex {

/// Process exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitInput = 2, kExitCap = 3 };

/// Entry point of the `dipex` tool. Normal output goes to `out`, diagnostics
/// and log lines to `err`.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace dipex
