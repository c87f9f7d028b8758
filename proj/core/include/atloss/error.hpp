#pragma once

#include <stdexcept>
#include <string>

namespace atloss {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite or otherwise malformed input data.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Hyperparameter or configuration value outside its admissible range.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Shapes of two operands disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Malformed file contents or failed file-system operation.
class IoError : public Error {
public:
    using Error::Error;
};

/// Raised by the trainer when a loss evaluates to NaN or Inf.
class NonFiniteLoss : public Error {
public:
    using Error::Error;
};

} // namespace atloss
