#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cqm::cli {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kSolver = 3 };

/// Entry point behind the `cqm` binary. Diagnostics go to `err` as one JSON
/// line; regular output to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cqm::cli
