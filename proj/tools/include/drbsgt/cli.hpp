#pragma once

#include <ostream>

namespace drbsgt {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,    // bad flags, bad config, schedule failing validation
  kExitRuntime = 2,  // errors while running, failed identity monitors
};

/// Entry point of the `drbsgt` tool: run, compare, validate, selftest.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace drbsgt
