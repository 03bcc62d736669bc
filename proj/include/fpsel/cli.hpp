#pragma once

#include <iostream>
#include <string>
#include <vector>

namespace fpsel {

/// Exit codes of the command-line driver.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2, kExitInput = 3 };

/// Runs `fpsel <args...>` (args excludes the program name). Reports go to
/// `out` unless `--out` names a file; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr,
            std::istream& in = std::cin);

}  // namespace fpsel
