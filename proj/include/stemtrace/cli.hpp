#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace stemtrace {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `stemtrace` tool. args excludes the program name.
/// Binary output (preview PNGs) goes to `out`, diagnostics to `err`.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace stemtrace
