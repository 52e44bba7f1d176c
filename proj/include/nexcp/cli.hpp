#pragma once

#include <ostream>

namespace nexcp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `nexcp` tool: simulate, elec2, bounds, diagnose.
/// Returns the process exit code; nothing is written to disk when the
/// configuration is rejected.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nexcp
