#pragma once

#include <stdexcept>
#include <string>

namespace cavcat {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters, malformed input files, violated preconditions.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A numerical diagnostic failed (trace drift, resolution, convergence).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Fock truncation was too small for the requested drive.
class CutoffError : public NumericalError {
public:
    CutoffError(const std::string& what, int cutoff, double top_population)
        : NumericalError(what), cutoff_(cutoff), top_population_(top_population) {}

    int cutoff() const noexcept { return cutoff_; }
    double top_population() const noexcept { return top_population_; }

private:
    int cutoff_;
    double top_population_;
};

} // namespace cavcat
