#pragma once

#include <iosfwd>

namespace unetsearch {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point of the `unetsearch` tool. Subcommands: search, decode,
/// analyze, export, resume. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace unetsearch
