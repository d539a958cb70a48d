#pragma once

#include <stdexcept>
#include <string>

namespace pqs {

enum class ErrorKind {
    dimension_mismatch,
    non_finite,
    invalid_argument,
    undefined_derivative,
    not_positive_definite,
    singular_system,
    fit_failure,
    io,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::non_finite: return "non_finite";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::undefined_derivative: return "undefined_derivative";
    case ErrorKind::not_positive_definite: return "not_positive_definite";
    case ErrorKind::singular_system: return "singular_system";
    case ErrorKind::fit_failure: return "fit_failure";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace pqs
