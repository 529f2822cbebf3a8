#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lockreach {

// Runs one CLI invocation (argv without the program name) and writes the
// report to `out` and diagnostics to `err`. Exit status: 0 = analysis
// completed (whatever the verdict), 1 = input error, 2 = internal invariant
// failure.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lockreach
