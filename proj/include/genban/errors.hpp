#pragma once

#include <stdexcept>
#include <string>

namespace genban {

// Invalid configuration values (non-positive horizon, bad hyperparameters, schema violations).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A caller broke a documented precondition (dimension mismatch, history misuse).
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Input outside the support of a finite environment.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Enumeration would exceed its term cap.
class EnumerationLimit : public std::length_error {
public:
    using std::length_error::length_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss for every learning-rate candidate.
class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace genban
