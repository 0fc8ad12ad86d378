#pragma once

#include <iosfwd>

namespace semtag::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 1;
inline constexpr int exit_runtime = 2;

// Parses argv (argv[0] is the program name) and runs one subcommand.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace semtag::cli
