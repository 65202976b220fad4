#pragma once

#include <stdexcept>
#include <string>

namespace refract {

/// Argument outside the mathematical domain of an operation (negative x, s at a pole).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A numerical procedure failed to converge or produced an inconsistent result.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller violated an API precondition (grid mismatch, index out of order).
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Invalid model or run configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace refract
