#pragma once

#include <string>
#include <vector>

namespace mdpreg {

// Entry point shared by the mdpreg binary and the CLI tests. `args` excludes
// the program name. Returns 0 on success, 1 on usage/input errors, 2 on
// numerical failures.
int run_command(const std::vector<std::string>& args);

}  // namespace mdpreg
