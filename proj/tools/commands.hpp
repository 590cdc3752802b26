#pragma once

#include <ostream>

namespace lfv::cli {

/// Runs one subcommand. Exit codes: 0 ok, 2 config error, 3 numeric error,
/// 4 invariant failure.
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lfv::cli
