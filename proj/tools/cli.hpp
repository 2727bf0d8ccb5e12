#pragma once

#include <iosfwd>

namespace segstab::cli {

/// Exit codes of the command-line tool.
enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2 };

/// Runs the `segstab` command line. Reports and diagnostics go to `out`/`err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace segstab::cli
