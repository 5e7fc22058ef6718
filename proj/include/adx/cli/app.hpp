#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace adx::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2; // bad flags, config, spec or input data
inline constexpr int kExitIo = 3;    // unreadable inputs, unwritable outputs

// Environment variable naming the default output root. Without --out a
// command writes to <root>/<command>, the root defaulting to ./adx-out.
inline constexpr const char* kOutputRootEnv = "ADX_OUTPUT_ROOT";

// Runs one command line (program name excluded) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace adx::cli
