#pragma once

#include <string>
#include <vector>

namespace fash::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kNumeric = 4 };

// Runs the `fash` command line. Errors are reported on stderr and mapped to
// the exit codes above.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);  // args exclude the program name

// "lo:hi:step" (inclusive, step > 0) or a comma-separated list.
std::vector<double> parse_real_list(const std::string& text);

}  // namespace fash::cli
