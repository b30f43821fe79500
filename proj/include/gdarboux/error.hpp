#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gdarboux {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ChartMismatch : public Error {
public:
    ChartMismatch() : Error("operands live on different charts") {}
    explicit ChartMismatch(const std::string& what) : Error(what) {}
};

class ParityError : public Error {
public:
    using Error::Error;
};

/// Raised by the expression parser; carries the byte offset of the failure.
class ParseError : public Error {
public:
    ParseError(std::string msg, std::size_t pos)
        : Error(msg + " at position " + std::to_string(pos)), position_(pos), message_(std::move(msg)) {}
    std::size_t position() const noexcept { return position_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::size_t position_;
    std::string message_;
};

/// Numeric evaluation hit a singularity (zero body in a denominator, log of a nonpositive body).
class EvaluationError : public Error {
public:
    using Error::Error;
};

/// The integrand does not match any supported antiderivative pattern.
class NonIntegrable : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

/// A linear system over the function algebra has no (unique) solution.
class SingularSystem : public Error {
public:
    using Error::Error;
};

} // namespace gdarboux
