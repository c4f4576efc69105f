#pragma once

#include <stdexcept>
#include <string>

namespace demonet {

/// Shape or dimension contract violated by an operation's inputs.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A configuration value is outside its documented domain.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A file could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file was readable but its contents violate the expected format.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A NaN or Inf appeared where finite values are required.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace demonet
