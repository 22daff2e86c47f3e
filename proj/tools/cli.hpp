#pragma once

#include <iosfwd>

namespace lexboost::cli {

/// Exit codes of the lexboost command.
enum ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kDataError = 2,
  kInternal = 3,
};

/// Entry point for `lexboost <index|graph|run|eval|sweep|synth> ...`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lexboost::cli
