#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace convlim {

// Self-checking property suites behind `convlim verify`. Each suite prints
// one PASS/FAIL line to `out`; the return value is true iff all passed.
bool run_verification_suites(std::ostream& out, std::uint64_t seed = 1);

// Builds one random net, prints the worst representation error over random
// inputs, and returns it.
double representation_spot_check(std::ostream& out, std::uint64_t seed);

// Entry point behind the `convlim` binary. Exit codes: 0 success/pass,
// 1 violated verdict or failed check, 2 usage error.
int cli_dispatch(const std::vector<std::string>& args);

}  // namespace convlim
