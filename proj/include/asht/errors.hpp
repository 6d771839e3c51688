#pragma once

#include <stdexcept>
#include <string>

namespace asht {

// Malformed input: bad instance file, off-simplex weights, wrong dimensions.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Argument outside an operation's mathematical domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Iterative solver ran out of budget. Carries the best bracket found so far.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double lower, double upper)
        : std::runtime_error(what), lower_(lower), upper_(upper) {}
    double lower() const { return lower_; }
    double upper() const { return upper_; }

private:
    double lower_;
    double upper_;
};

// Requested grid or table would exceed the configured memory cap.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace asht
