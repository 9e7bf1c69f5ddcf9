#pragma once

#include <stdexcept>
#include <string>

namespace mpbuck {

/// An argument or configuration violates a documented invariant.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Configuration text could not be parsed (malformed JSON, unknown key, wrong type).
class ParseError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// A simulation state left the finite range or the divergence bound.
class NonFiniteState : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Metrics were requested for a trace with no samples.
class EmptyTrace : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reading or writing a file failed.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mpbuck
