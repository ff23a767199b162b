#pragma once

#include <ostream>
#include <string_view>

namespace cocoon::driver {

inline constexpr std::string_view kStatsVersion = "cocoon-stats/1";

enum ExitCode : int { kOk = 0, kDiagnostics = 1, kRuntimeError = 2, kInternalError = 3 };

/// The `cocoon` command line. Output goes to `out`, diagnostics to `err`.
int runCli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace cocoon::driver
