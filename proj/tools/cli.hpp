#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace chainmetric::tool {

enum ExitCode : int {
  kSuccess = 0,
  kValidationFailure = 2,
  kUsage = 64,
  kIoError = 74,
};

// args excludes the program name. JSON goes to out, diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace chainmetric::tool
