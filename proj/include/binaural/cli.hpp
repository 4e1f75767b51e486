// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
//
// Command-line front end: gen-data, train, eval, spatialize, attend, metrics.

#ifndef BINAURAL_CLI_HPP_
#define BINAURAL_CLI_HPP_

#include <iostream>

namespace binaural::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

// Parses argv (argv[0] is the program name) and runs one subcommand.
int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace binaural::cli

#endif  // BINAURAL_CLI_HPP_
