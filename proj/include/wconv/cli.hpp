#pragma once

#include <iosfwd>

namespace wconv {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point of the `wconv` tool: train, sweep, bench, metrics, selftest.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wconv
