#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vioscan::cli {

// Exit statuses: 0 ok, 1 operational failure, 2 invalid invocation,
// 3 validation failures found.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsage = 2;
inline constexpr int kInvalid = 3;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vioscan::cli
