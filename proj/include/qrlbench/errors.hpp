#pragma once

#include <stdexcept>
#include <string>

namespace qrlbench {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Qubit, state, or action index outside its valid range.
class IndexError : public Error {
public:
    using Error::Error;
};

/// Invalid argument value (zero shots, non-finite angle, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration, layout file, or dimension mismatch.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Operation invoked in the wrong state (e.g. stepping a finished episode).
class StateError : public Error {
public:
    using Error::Error;
};

/// Numerical failure: degenerate distribution, non-convergence, infinite coupling.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Parameter-shift differentiation requested through a non-rotation gate.
class UnsupportedGradientError : public Error {
public:
    using Error::Error;
};

/// Exact oracle requested beyond its size cap.
class SizeLimitError : public Error {
public:
    using Error::Error;
};

}  // namespace qrlbench
