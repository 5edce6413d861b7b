#pragma once

#include <stdexcept>
#include <string>

namespace soh {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file content (carries a 1-based line number when known).
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Structurally valid input that violates a data invariant (names the cell).
class DataError : public Error {
public:
    using Error::Error;
};

/// Missing or mismatched columns / required fields.
class SchemaError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace soh
