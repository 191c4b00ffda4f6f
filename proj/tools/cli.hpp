#pragma once

#include <string>
#include <vector>

namespace elemgrasp::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitNoElements = 4,
  kExitIo = 5,
};

/// Runs one subcommand; `args` excludes the program name. Never throws.
int run_cli(const std::vector<std::string>& args);

}  // namespace elemgrasp::cli
