#pragma once

#include <stdexcept>
#include <string>

namespace qndsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (wrong dimensions, bad ranges, ...).
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

/// A matrix dimension exceeded the configured cap.
class SizeError : public InvalidArgument {
  public:
    using InvalidArgument::InvalidArgument;
};

/// A matrix that should be a density matrix is not one (beyond repair tolerance).
class NotAStateError : public Error {
  public:
    using Error::Error;
};

/// Time stepping or an iterative method failed to reach the requested accuracy.
class ConvergenceError : public Error {
  public:
    using Error::Error;
};

/// Conditioning on a measurement outcome whose probability is (numerically) zero.
class ConditioningError : public Error {
  public:
    using Error::Error;
};

/// Malformed or inconsistent configuration input.
class ConfigError : public Error {
  public:
    using Error::Error;
};

}  // namespace qndsim
