#ifndef GFEIG_ERRORS_HPP
#define GFEIG_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace gfeig {

/// A rate, kernel or problem definition that cannot describe a valid model.
class InvalidSpec : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An argument outside the mathematical domain of an operation (y <= 0, N too small, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Truncation or solver parameters that leave the regime where the problem is well posed.
class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The shifted inverse iteration ran out of iterations. Carries the last iterate.
class NonConvergence : public std::runtime_error {
public:
    NonConvergence(const std::string& what, double lambda, std::vector<double> last_iterate)
        : std::runtime_error(what), lambda_(lambda), last_(std::move(last_iterate)) {}

    double lambda() const noexcept { return lambda_; }
    const std::vector<double>& last_iterate() const noexcept { return last_; }

private:
    double lambda_;
    std::vector<double> last_;
};

/// A discrete eigenvector or density picked up a negative component beyond roundoff.
class PositivityViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The explicit time step collapsed (rates too large for the grid).
class StepSizeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed config text or an unknown key.
class ConfigSyntaxError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gfeig

#endif  // GFEIG_ERRORS_HPP
