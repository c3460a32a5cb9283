#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ddica {

// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Unreadable, truncated or shape-incompatible input data (CLI exit code 3).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Training produced a non-finite objective (CLI exit code 4).
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::size_t iteration)
        : std::runtime_error(what), iteration_(iteration) {}
    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

// Iterative eigensolver failed to converge.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, long iterations)
        : std::runtime_error(what), iterations_(iterations) {}
    long iterations() const noexcept { return iterations_; }

private:
    long iterations_;
};

}  // namespace ddica
