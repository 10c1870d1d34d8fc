#pragma once

#include <stdexcept>
#include <string>

namespace toftomo {

// Three families, mapped one-to-one onto CLI exit codes 2/3/4.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ArgumentError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class DimensionError : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

class UnsupportedStateError : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

class AliasingError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class TruncationError : public NumericError {
public:
    TruncationError(const std::string& what, double leakage)
        : NumericError(what), leakage_(leakage) {}
    double leakage() const { return leakage_; }

private:
    double leakage_;
};

class DegenerateInputError : public DataError {
public:
    using DataError::DataError;
};

class GridMismatchError : public DataError {
public:
    using DataError::DataError;
};

class BootstrapAbortedError : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace toftomo
