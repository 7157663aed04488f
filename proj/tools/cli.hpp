#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace relhoi {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitInvalid = 2;

// Runs the command line `args` (without the program name), writing normal
// output to `out` and diagnostics to `err`. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace relhoi
