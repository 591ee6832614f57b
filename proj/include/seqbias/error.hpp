#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace seqbias {

// Base for every error raised by the library. The CLI maps subclasses onto
// its exit-code taxonomy (1 I/O or parse, 2 precondition).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid model or run configuration; message names the offending field.
class ConfigError : public Error {
public:
    ConfigError(const std::string& field, const std::string& what)
        : Error("invalid config field '" + field + "': " + what), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class LengthError : public Error {
public:
    using Error::Error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class DegenerateError : public InputError {
public:
    using InputError::InputError;
};

// Raised when a computation is refused because its cost is prohibitive.
class RefusalError : public Error {
public:
    RefusalError(const std::string& what, std::uint64_t cost) : Error(what), cost_(cost) {}
    std::uint64_t cost() const noexcept { return cost_; }

private:
    std::uint64_t cost_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace seqbias
