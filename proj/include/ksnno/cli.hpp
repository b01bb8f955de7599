#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ksnno::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitToleranceFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point behind the ksnno_cli binary. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "a:b:count" (inclusive uniform grid) or a comma-separated list.
std::vector<double> parse_t_grid(const std::string& spec);
std::vector<int> parse_int_list(const std::string& spec);

}  // namespace ksnno::cli
