#pragma once

#include <stdexcept>
#include <string>

namespace nlpar {

/// Out-of-range numeric parameter (order, ellipticity, scale, grid spacing...).
struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an operation does not hold.
struct PreconditionError : std::logic_error {
    using std::logic_error::logic_error;
};

/// An integral against the kernel or the weight does not converge for the given tail model.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Explicit step requested with a time step above the monotonicity bound.
struct CflViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Configuration could not be parsed or validated. `where` holds a line or key path.
struct ConfigError : std::runtime_error {
    ConfigError(const std::string& where, const std::string& what)
        : std::runtime_error(where + ": " + what), location(where) {}
    std::string location;
};

}  // namespace nlpar
