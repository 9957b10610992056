#pragma once

#include <stdexcept>
#include <string>

namespace respec {

enum class ErrorCode {
    Syntax,
    BoundsReversed,
    UnknownName,
    UnresolvedVariable,
    DivisionByZero,
    TypeMismatch,
    NotFound,
    UnknownProposition,
    UndiffableChange,
    UnknownScenario,
    TriviallyViolatedAtInit,
    SolverNonconvergence,
    InvalidConfig,
    Io,
};

const char* to_string(ErrorCode code);

/// Base exception for every recoverable failure in the library.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Parse failures carry the 1-based source position of the offending token.
class ParseError : public Error {
public:
    ParseError(ErrorCode code, const std::string& message, int line, int column)
        : Error(code, message + " at " + std::to_string(line) + ":" + std::to_string(column)),
          line_(line), column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

} // namespace respec
