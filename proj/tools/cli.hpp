#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cartanflow::cli {

// Stable exit-code contract.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 1;
inline constexpr int kSolverFailure = 2;
inline constexpr int kNearSingular = 3;
inline constexpr int kCheckFailure = 4;

/// Runs the full command line (without argv[0]); output and diagnostics go to
/// the supplied streams. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace cartanflow::cli
