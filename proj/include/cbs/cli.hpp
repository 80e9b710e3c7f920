#pragma once

#include <string>
#include <vector>

namespace cbs::cli {

/// Entry point for the command-line tool; args excludes the program name.
/// Returns the process exit code: 0 success, 2 usage, 3 validation, 4 io or
/// other runtime failure.
int run(const std::vector<std::string>& args);

}  // namespace cbs::cli
