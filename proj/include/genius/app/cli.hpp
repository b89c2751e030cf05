/// @file cli.hpp
/// @brief The `genius` command line: verify-theorems, steer-demo, score,
/// report and agree.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace genius::app {

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;  // a requested check did not pass
inline constexpr int kExitUsage = 2;        // bad flags, config file or option values
inline constexpr int kExitRuntime = 3;      // unreadable or invalid inputs, backend errors

/// Runs the command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace genius::app
