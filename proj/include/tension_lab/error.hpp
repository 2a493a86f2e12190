#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tension_lab {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied parameter violates an operation's precondition.
/// `parameter()` names the offending input.
class ValidationError : public Error {
public:
    ValidationError(std::string parameter, const std::string& what)
        : Error(parameter + ": " + what), parameter_(std::move(parameter)) {}

    const std::string& parameter() const noexcept { return parameter_; }

private:
    std::string parameter_;
};

/// The request is well-formed but cannot be computed (state space too large,
/// empty configuration set, enumeration cap exceeded).
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// Boundary data admits no height-function extension. Carries a pair of
/// boundary sites whose values violate the Lipschitz or parity constraint.
class NotExtendableError : public Error {
public:
    NotExtendableError(std::vector<int> x, std::vector<int> y, const std::string& what)
        : Error(what), x_(std::move(x)), y_(std::move(y)) {}

    const std::vector<int>& first() const noexcept { return x_; }
    const std::vector<int>& second() const noexcept { return y_; }

private:
    std::vector<int> x_;
    std::vector<int> y_;
};

}  // namespace tension_lab
