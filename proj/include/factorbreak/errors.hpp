#pragma once

#include <stdexcept>
#include <string>

namespace factorbreak {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (CSV, numeric cells, ragged rows).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Sizes or indices outside an operation's admissible range.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Numerical breakdown: degenerate eigenvalues, singular weighting matrices,
/// indefinite long-run variances.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace factorbreak
