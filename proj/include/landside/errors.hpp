#pragma once

#include <stdexcept>
#include <string>

namespace landside {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid parameter or configuration value (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

/// Malformed, inconsistent, or insufficient data (CLI exit code 3).
struct DataError : Error {
    using Error::Error;
};

/// Solver failed to converge (CLI exit code 4). Carries the last residuals.
struct SolverError : Error {
    double primal_residual;
    double dual_residual;
    SolverError(const std::string& what, double primal, double dual)
        : Error(what), primal_residual(primal), dual_residual(dual) {}
};

}  // namespace landside
