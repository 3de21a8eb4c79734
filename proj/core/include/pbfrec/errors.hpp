#pragma once

#include <stdexcept>
#include <string>

namespace pbfrec {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid parameters or configuration (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed, inconsistent or degenerate input data (CLI exit code 3).
class DataError : public Error {
public:
    using Error::Error;
};

}  // namespace pbfrec
