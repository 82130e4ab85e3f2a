#pragma once

#include <stdexcept>
#include <string>

namespace dvssim {

/// Raised when a physical parameter or bias lies outside its valid domain.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised for malformed or unreadable input files and configuration.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace dvssim
