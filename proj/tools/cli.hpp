#pragma once

#include <string>
#include <vector>

namespace dai::cli {

/// Entry point of the `dai` tool. Returns the process exit code: 0 on
/// success, 1 for runtime failures, 2 for usage errors. Failures print one
/// line "error: <category>: <message>" to stderr.
int parse_and_dispatch(int argc, const char* const* argv);
int parse_and_dispatch(const std::vector<std::string>& args);

/// DAI_OUTPUT_ROOT when set, otherwise "runs".
std::string default_output_root();

}  // namespace dai::cli
