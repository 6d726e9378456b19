#pragma once

#include <stdexcept>
#include <string>

namespace entroflow {

enum class ErrorKind {
    invalid_field,
    argument,
    domain,
    degenerate_density,
    contract,
    domain_too_small,
    numerical_blowup,
    step_failure,
    not_applicable,
    io,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_field: return "invalid-field";
    case ErrorKind::argument: return "argument";
    case ErrorKind::domain: return "domain";
    case ErrorKind::degenerate_density: return "degenerate-density";
    case ErrorKind::contract: return "contract";
    case ErrorKind::domain_too_small: return "domain-too-small";
    case ErrorKind::numerical_blowup: return "numerical-blowup";
    case ErrorKind::step_failure: return "step-failure";
    case ErrorKind::not_applicable: return "not-applicable";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

/// Single exception type for the library; `kind()` distinguishes the failure class.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace entroflow
