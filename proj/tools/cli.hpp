#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kepod::cli {

enum Exit { kOk = 0, kUsage = 1, kNoSolution = 2, kCheckFailed = 3 };

/// argv[0] is the program name.  Output goes to `out` unless -o is given.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace kepod::cli
