#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cisim::cli {

enum ExitCode : int {
  kOk = 0,
  kRuntimeError = 1,
  kValidation = 2,
  kConvergence = 3,
  kUsage = 64,
};

// Runs one command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cisim::cli
