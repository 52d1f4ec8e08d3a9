#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rmt::cli
{

// Exit codes: 0 success, 1 usage or invalid input, 2 numerical failure (JSON detail on stderr).
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);
int run(int argc, char **argv);

}  // namespace rmt::cli
