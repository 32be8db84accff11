#pragma once

#include <iosfwd>

namespace cauda::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNetwork = 3 };

/// Runs the `cauda` command line. Never throws; every failure maps to an
/// ExitCode with a message on `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cauda::cli
