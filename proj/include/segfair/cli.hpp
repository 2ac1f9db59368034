#pragma once

namespace segfair {

// Exit codes: 0 success, 2 input error, 3 design infeasible,
// 4 internal invariant violation.
int run_cli(int argc, const char* const* argv);

} // namespace segfair
