#pragma once

#include <iosfwd>

namespace qchns {

/// Subcommands: run <config>, operator-lab <config> [--resolvent],
/// convergence <config>, energy-report <csv>.
/// Exit codes: 0 success, 2 configuration/usage error, 3 step failure,
/// 4 operator-lab assertion failure.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qchns
