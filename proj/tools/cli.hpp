#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace diffdraw {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitRuntime = 2 };

/// Full command-line entry point; argv[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace diffdraw
