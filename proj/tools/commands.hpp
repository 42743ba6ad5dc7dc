#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fracdiff::cli {

/// Exit codes of run_command.
enum ExitCode : int { Success = 0, Inconclusive = 1, UsageError = 2 };

/// Parses argv and runs one subcommand:
///   solve-parabolic | solve-elliptic | sweep-epsilon | phase-diagram |
///   verify --suite {green,explicit,diagnostics,operator} | verify-operator
/// Every subcommand takes --config <file> and --out <dir>. Results and
/// diagnostics go to `err`; the one-line report of solve-elliptic to `out`.
/// `args` excludes the program name.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_command(int argc, char** argv);

}  // namespace fracdiff::cli
