#pragma once

#include <iosfwd>

namespace sbcli {

enum ExitCode : int {
  kOk = 0,
  kBadArguments = 2,
  kUnknownLsf = 3,
  kRuntimeFailure = 4,
  kPartialGallery = 5,
};

/// Runs the susbench command line. CSV goes to --out or `out`; the summary
/// line goes to `out` when CSV is written to a file, to `err` otherwise.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sbcli
