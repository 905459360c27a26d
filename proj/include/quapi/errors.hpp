// errors.hpp: Exception hierarchy shared by the library and the CLI exit-code mapping

#pragma once

#include <stdexcept>
#include <string>

namespace quapi {

// Invalid input: non-Hermitian operators, bad parameters, malformed config.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Raised when the pure-dephasing requirement [sigma1, H_S] = 0 does not hold.
class DephasingConditionError : public ValidationError {
public:
    DephasingConditionError(const std::string& what, double norm)
        : ValidationError(what), commutator_norm_(norm) {}

    double commutator_norm() const noexcept { return commutator_norm_; }

private:
    double commutator_norm_;
};

// Quadrature or fit failed to reach its tolerance.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double achieved_error)
        : std::runtime_error(what), achieved_error_(achieved_error) {}

    double achieved_error() const noexcept { return achieved_error_; }

private:
    double achieved_error_;
};

// A configured run would exceed a hard resource cap (path count, tensor memory).
class ResourceLimitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace quapi
