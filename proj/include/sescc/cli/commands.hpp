#pragma once

// solve / flow / spectral / sweep. Each writes its artifacts under the output
// directory; every artifact carries the config hash and engine version.

#include "sescc/cli/config.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace sescc::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kConvergenceError = 3 };

int cmd_solve(const RunConfig& cfg, std::ostream& log);
int cmd_flow(const RunConfig& cfg, std::ostream& log);
int cmd_spectral(const RunConfig& cfg, std::ostream& log);
int cmd_sweep(const RunConfig& cfg, std::ostream& log);

/// Full command line without the program name, e.g. {"solve", "--seed-paper"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "%.9g"
std::string fmt9(double x);

}  // namespace sescc::cli
