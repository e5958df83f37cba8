#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cqba::cli {

enum ExitCode { ok = 0, protocol_failure = 1, usage_error = 2 };

/// Runs the command line `args` (without the program name), writing results
/// to `out` or to the --out target and diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cqba::cli
