#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lemda {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2 };

// Subcommands: synth, fit, transform, bench, report. Returns the process
// exit status.
int run_command(int argc, char** argv);
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lemda
