#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace acecode::cli {

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kMalformedInput = 2,
  kRunnerFailure = 3,
  kDiverged = 4,
};

/// Entry point behind the `acecode` binary. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace acecode::cli
