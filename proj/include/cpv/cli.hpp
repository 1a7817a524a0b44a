#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cpv {

// Runs the command line (without the program name). Returns the exit code:
// 0 holds / succeeded, 1 fails / nonexistence proven, 2 input or resource error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cpv
