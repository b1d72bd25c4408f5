#pragma once

#include <stdexcept>
#include <string>

namespace aqnmf {

/// Failure categories. The CLI maps these onto exit codes.
enum class ErrorKind {
    shape,
    rank,
    domain,
    size,
    degenerate,
    range,
    io,
    format,
    conflict,
    imputation,
    empty_rose,
    undefined_share,
    coverage,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace aqnmf
