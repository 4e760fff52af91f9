#pragma once

#include <string>
#include <vector>

namespace dane::cli {

// Runs one command line (without the program name). Returns 0 on success,
// 2 for usage errors and 1 for runtime failures; diagnostics go to stderr.
int run(const std::vector<std::string>& args);

}  // namespace dane::cli
