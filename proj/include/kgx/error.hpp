#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kgx {

// Machine-readable error categories. The HTTP layer maps these onto status
// codes and the CLI maps them onto exit codes.
enum class ErrorCode {
    Parse,
    Validation,
    Domain,
    Config,
    NotFound,
    Comparability,
    Format,
    Training,
    Storage,
    InsufficientViolations,
    Lookup,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Raised by line-oriented readers; the line number is 1-based.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message)
        : Error(ErrorCode::Parse, "line " + std::to_string(line) + ": " + message), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace kgx
