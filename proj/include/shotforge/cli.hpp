#pragma once

// Command-line surface: optimize, baselines, evaluate, report and
// cache stats|purge. Exit codes: 0 ok, 2 config or input error, 3 backend
// failure.

#include <iosfwd>
#include <string>
#include <vector>

namespace shotforge {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitBackend = 3;

/// Runs one command. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace shotforge
