#pragma once

// Subcommand front end: validate, extend, kernel, decompose, channels,
// canonical, check, simulate, lattice, fit.

#include <iosfwd>
#include <string>
#include <vector>

namespace openext::cli {

enum ExitStatus : int { kSuccess = 0, kValidationFailure = 1, kNumericFailure = 2 };

/// Runs one command. `args` excludes the program name. Reports go to `out`
/// unless --out names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace openext::cli
