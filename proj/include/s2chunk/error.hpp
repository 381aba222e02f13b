#pragma once

#include <stdexcept>
#include <string>

namespace s2chunk {

/// Base for every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input payload (bad JSON, missing or mistyped field).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0, std::string field = {})
        : Error(what), line_(line), field_(std::move(field)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

/// Well-formed input that violates a domain invariant.
class ValidationError : public Error {
public:
    ValidationError(const std::string& what, std::string region_id = {})
        : Error(what), region_id_(std::move(region_id)) {}

    const std::string& region_id() const noexcept { return region_id_; }

private:
    std::string region_id_;
};

/// Two inputs that were expected to describe the same region set do not.
class MismatchError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

/// Embedding service unreachable or returned a non-conforming response.
class TransportError : public Error {
public:
    TransportError(const std::string& what, std::size_t batch_index)
        : Error(what), batch_index_(batch_index) {}

    std::size_t batch_index() const noexcept { return batch_index_; }

private:
    std::size_t batch_index_;
};

}  // namespace s2chunk
