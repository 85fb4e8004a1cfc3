#pragma once

#include <stdexcept>
#include <string>

namespace survq {

/// Broad failure classes. The CLI maps `validation` to exit code 2 and
/// `numerical` to exit code 3.
enum class ErrorClass { validation, numerical };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what)
        : std::runtime_error(what), cls_(cls) {}

    ErrorClass error_class() const noexcept { return cls_; }

private:
    ErrorClass cls_;
};

/// Malformed arguments or data (empty sample, p outside (0,1), ...).
class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& what) : Error(ErrorClass::validation, what) {}
};

/// A scenario parameter that violates a feasibility bound.
class InfeasibleDelta : public Error {
public:
    explicit InfeasibleDelta(const std::string& what) : Error(ErrorClass::validation, what) {}
};

/// Target power cannot be reached (zero effect, target <= alpha, ...).
class UnattainablePower : public Error {
public:
    explicit UnattainablePower(const std::string& what) : Error(ErrorClass::validation, what) {}
};

/// Requested probability exceeds what the Kaplan-Meier curve reaches.
class UnreachableQuantile : public Error {
public:
    UnreachableQuantile(const std::string& what, double max_probability)
        : Error(ErrorClass::numerical, what), max_probability_(max_probability) {}

    double max_probability() const noexcept { return max_probability_; }

private:
    double max_probability_;
};

/// Greenwood sum diverges: a step with Y_j == d_j is included.
class DegenerateTail : public Error {
public:
    explicit DegenerateTail(const std::string& what) : Error(ErrorClass::numerical, what) {}
};

/// Density estimation could not produce a usable value.
class EstimationError : public Error {
public:
    explicit EstimationError(const std::string& what) : Error(ErrorClass::numerical, what) {}
};

/// Covariance matrix is not (numerically) positive definite.
class SingularCovariance : public Error {
public:
    SingularCovariance(const std::string& what, std::size_t first, std::size_t second)
        : Error(ErrorClass::numerical, what), first_(first), second_(second) {}

    std::size_t first_index() const noexcept { return first_; }
    std::size_t second_index() const noexcept { return second_; }

private:
    std::size_t first_;
    std::size_t second_;
};

}  // namespace survq
