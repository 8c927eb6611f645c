#pragma once

#include <iosfwd>

namespace coaching::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitRuntimeError = 2;

/// Entry point for the `coaching` tool: train, compare, evaluate, pid-baseline.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace coaching::cli
