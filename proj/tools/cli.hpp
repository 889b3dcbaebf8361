#pragma once

#include <iosfwd>

namespace telecomrag::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitProvider = 3;

/// Runs `telecomrag <command> ...` and returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace telecomrag::cli
