#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace msk::cli {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kConfigError = 2,
    kSolverFailure = 3,
};

/// Runs the command line `args` (args[0] is the program name). Diagnostics
/// go to `err`, short summaries to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace msk::cli
