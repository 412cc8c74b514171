#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mvbev {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2 };

/// `args[0]` is the program name. Usage errors go to `err` prefixed "usage:",
/// data errors prefixed "error:".
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace mvbev
