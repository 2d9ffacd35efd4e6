#pragma once

#include <ostream>

namespace lorentzscope::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitInput = 2,
  kExitPrecondition = 3,
};

// Entry point of the `lorentzscope` tool. Diagnostics go to `err`, tables
// and summaries to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lorentzscope::cli
