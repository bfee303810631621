#pragma once

#include <string>
#include <vector>

namespace lanpaint::cli {

// Exit codes of the command-line tool.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 1;
inline constexpr int kNumericalError = 2;

int run(int argc, char** argv);
// Same as run, with args[0] as the program name.
int run(const std::vector<std::string>& args);

}  // namespace lanpaint::cli
