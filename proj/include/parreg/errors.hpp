#pragma once

#include <stdexcept>
#include <string>

namespace parreg {

/// Malformed or non-finite input data (bad vectors, mismatched grids, NaNs).
class InvalidInputError : public std::invalid_argument {
public:
    explicit InvalidInputError(const std::string& what) : std::invalid_argument(what) {}
};

/// Exponents or structural parameters outside their admissible range.
class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

/// An envelope fails the integrability-class membership required by an operation.
class EnvelopeClassError : public std::runtime_error {
public:
    explicit EnvelopeClassError(const std::string& what) : std::runtime_error(what) {}
};

/// An iterative scheme failed to converge within its declared limits.
class ConvergenceError : public std::runtime_error {
public:
    explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Config file parse or validation failure.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace parreg
