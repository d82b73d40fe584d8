#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace irpf {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitTooFewClean = 3;

/// Runs one command. `args` excludes the program name, e.g.
/// {"reject", "--input", "rec.csv", "--rate", "200", "--output", "out"}.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace irpf
