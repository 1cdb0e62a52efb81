#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace malfam {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed XML or CSV text. Carries the 1-based position of the fault.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : Error(what + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
          line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Well-formed input that violates the expected document layout.
class SchemaError : public Error {
public:
    SchemaError(std::string field, const std::string& what)
        : Error("field '" + field + "': " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Arguments that break an operation's preconditions.
class InputError : public Error {
public:
    using Error::Error;
};

}  // namespace malfam
