#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace peerfx {

inline constexpr const char* kToolVersion = "1.0.0";

// Exit status: 0 success, 1 runtime failure, 2 usage error. Failures also
// write error.json into the output directory when one is known, and one JSON
// line to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace peerfx
