#pragma once

#include <stdexcept>
#include <string>

namespace nbo {

enum class ErrorCode {
    InvalidArgument,
    DomainError,
    DegenerateData,
    SingularCovariance,
    AcquisitionFailure,
    NotFound,
    Validation,
    Conflict,
    NoModel,
    Io,
};

const char* to_string(ErrorCode code);

/// Base exception for the library. `field` is a JSON-style path for
/// validation errors ("variables[1].upper"), empty otherwise.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string field = {})
        : std::runtime_error(message), code_(code), field_(std::move(field)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& field() const noexcept { return field_; }

private:
    ErrorCode code_;
    std::string field_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message, std::string field = {}) {
    throw Error(code, message, std::move(field));
}

}  // namespace nbo
