#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace penseg::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kUsage = 64, kNumericFailure = 70 };

/// Runs the command line `args` (without the program name). Reports go to
/// `out` unless --output names a file; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace penseg::cli
