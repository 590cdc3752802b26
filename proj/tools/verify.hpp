#pragma once

#include <cstdint>
#include <ostream>

namespace lfv::cli {

/// Invariant suite over all modules, one PASS/FAIL line per invariant.
/// Returns 0 when everything passes and 4 otherwise.
int run_verify(bool quick, std::uint64_t seed, std::ostream& out);

}  // namespace lfv::cli
