#pragma once

#include <ostream>

namespace lmc::cli {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Runs one subcommand. The summary JSON goes to `out`; on failure an error
/// JSON object goes to `err` and no artifacts are written.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lmc::cli
