#pragma once

#include <string>
#include <vector>

namespace ball3d::cli {

inline constexpr const char* kToolVersion = "1.0.0";

/// Parses and runs one command line (without the program name). Returns the process exit code:
/// 0 on success, 1 on a failed run, 2 on a usage error.
int run(const std::vector<std::string>& args);

}  // namespace ball3d::cli
