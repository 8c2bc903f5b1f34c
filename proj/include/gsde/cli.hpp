#pragma once

// Command-line front end:
//
//   gsde <subcommand> --config FILE [--out DIR] [--workers N]
//
// Subcommands: verify, simulate, stationarity, fokker-planck, transform-check,
// sweep-temperature. Exit codes: 0 all checks passed or the run completed,
// 1 a check failed (the report is still written), 2 configuration, evaluation
// or IO error.

#include <iosfwd>

namespace gsde {

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace gsde
