#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fbl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

// Runs one command; `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "a:b:step" (inclusive) or a comma list. Throws InvalidArgument when empty
// or malformed.
std::vector<double> parse_grid(const std::string& text);

}  // namespace fbl::cli
