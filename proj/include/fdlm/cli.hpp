#pragma once

// Command-line front end: solve, noise, grad-check, bench, profile, theory.

#include <iosfwd>
#include <string>
#include <vector>

namespace fdlm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// args excludes the program name. A `--config FILE` of key=value lines
/// supplies defaults that explicit flags override.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fdlm::cli
