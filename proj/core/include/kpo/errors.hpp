#pragma once

#include <stdexcept>
#include <string>

namespace kpo {

// Invalid or inconsistent run configuration (bad parameters, bad files).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure at run time: trajectory blow-up, non-convergence,
// norm drift beyond tolerance, imaginary residue beyond tolerance.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace kpo
