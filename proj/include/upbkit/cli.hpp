#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace upbkit::cli {

enum ExitCode : int { Success = 0, Negative = 1, Numerical = 2, Usage = 3 };

/// Runs one subcommand. `args` excludes the program name. Reports go to `out`
/// (or the --out file); diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace upbkit::cli
