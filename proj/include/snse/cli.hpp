#pragma once

#include <string>
#include <vector>

namespace snse::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Runs one CLI invocation. Exit codes: 0 success, 2 validation error,
/// 3 runtime/blowup error, 4 I/O error.
int run(int argc, const char* const* argv);

/// Same entry point for in-process callers (tests); `args` excludes the
/// program name.
int run(const std::vector<std::string>& args);

} // namespace snse::cli
