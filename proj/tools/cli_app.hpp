#pragma once

#include <ostream>

namespace taylorstaff::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 2;
inline constexpr int kValidation = 3;
inline constexpr int kNonConvergence = 4;

// Runs the taylorstaff command line; argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace taylorstaff::cli
