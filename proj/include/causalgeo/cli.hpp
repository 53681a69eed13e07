#pragma once

#include <string>
#include <vector>

namespace causalgeo {

// Command-line entry point; returns the process exit code (0 ok, 2 on
// parse/config errors, 3 on geometric errors).
int run_cli(const std::vector<std::string>& args);

}  // namespace causalgeo
