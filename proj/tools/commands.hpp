#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"
#include "cycledeg/adjoint.hpp"
#include "cycledeg/cycle.hpp"

namespace cycledeg::cli {

enum ExitCode { kOk = 0, kComputationError = 1, kConfigError = 2 };

/// Parses argv, runs one subcommand, and returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// The cycle named by a configuration: the period is solved first when the
/// config asks for it.
struct Analysis {
    SystemSpec spec;
    LimitCycle cycle;
};
Analysis analyse(const AnalysisConfig& config);

/// Built-in invariant suite; prints one line per check and returns true if all pass.
bool selftest(std::ostream& out);

/// %.17g
std::string format17(double v);

}  // namespace cycledeg::cli
