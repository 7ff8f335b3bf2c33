#pragma once

#include <stdexcept>
#include <string>

namespace bandit {

// Argument outside the domain of a family, posterior or bound.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Invalid experiment / policy configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Configuration that is valid in principle but not implemented for this family.
class UnsupportedConfiguration : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// A numerical routine failed to reach its target (CLI exit code 3).
class NumericFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File system failures carry the offending path in the message (CLI exit code 4).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bandit
