#ifndef ASSEMBLY_ERRORS_HPP
#define ASSEMBLY_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace assembly {

/// Input outside the mathematical domain of an operation (coincident
/// particles, negative temperature, mismatched shapes, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid configuration or option values.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Filesystem failures while persisting artifacts.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure inside the schedule solver.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace assembly

#endif
