#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace kinmap::cli {

/// Runs one command line (without the program name). Returns 0 on success, 1
/// when an analysis produced a failing report, 2 on usage or input errors.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kinmap::cli
