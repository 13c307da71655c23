#pragma once

#include <string>
#include <vector>

namespace polyp::cli {

// Entry point behind the `polyp` binary. Exit codes: 0 success, 1 domain
// errors (bad data), 2 usage errors.
int run(std::vector<std::string> args);

}  // namespace polyp::cli
