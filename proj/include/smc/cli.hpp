#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace smc::cli {

enum ExitCode : int { ok = 0, validation_error = 1, solver_failure = 2 };

/// Entry point of the `smc` tool. Writes reports to `out` and errors to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace smc::cli
