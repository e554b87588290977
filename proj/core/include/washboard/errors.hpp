#pragma once

#include <stdexcept>
#include <string>

namespace washboard {

/// Raised when an input violates a documented precondition or invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine fails (eigensolver, fit, truncation leak).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace washboard
