#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vocalfit::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
};

// Runs one command line. args[0] is the program name. Output and
// diagnostics go to the given streams.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vocalfit::cli
