#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dsp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNegative = 2;
inline constexpr int kExitBudget = 3;
inline constexpr int kExitUsage = 64;

/// Runs one `dsp` command; `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dsp
