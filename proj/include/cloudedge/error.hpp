#pragma once

#include <stdexcept>
#include <string>

namespace cloudedge {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or input data, detected before any work starts.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Shape mismatch between matrices or model components.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Non-finite values or a failed numerical procedure.
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace cloudedge
