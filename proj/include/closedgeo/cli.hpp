#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace closedgeo::cli {

/// Exit statuses of the command-line tool.
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kInputError = 2,  ///< also domain and resolution errors
  kNumericError = 3,
  kConsistencyError = 4,
};

/// Runs one subcommand. `args` excludes the program name. Results go to `out` unless an
/// output path is given; machine-readable error JSON goes to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace closedgeo::cli
