#pragma once

#include <iosfwd>

namespace factorbreak::cli {

enum ExitCode : int {
    kOk = 0,
    kInputError = 1,
    kRejected = 2,
    kNumericalError = 3,
};

/// Entry point shared by the executable and the tests. Reports go to `out`
/// unless --out is given; diagnostics go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace factorbreak::cli
