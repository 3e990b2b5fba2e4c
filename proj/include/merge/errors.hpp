#pragma once

#include <stdexcept>
#include <string>

namespace merge {

// Invalid or inconsistent configuration (bad JSON, violated invariants,
// infeasible initial conditions). CLI maps this to exit code 3.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failures while reading inputs or writing run artifacts. Exit code 4.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite value detected during training or evaluation. Exit code 5.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace merge
