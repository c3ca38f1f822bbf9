#pragma once

#include <stdexcept>
#include <string>

namespace v2xsim {

/// Base of every typed error raised by the library. The CLI maps any
/// Error to a nonzero exit code and prints what().
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
public:
    using Error::Error;
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

/// Duplicate id on insert, missing id on remove.
class Conflict : public Error {
public:
    using Error::Error;
};

class NotFound : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class GenerationFailed : public Error {
public:
    using Error::Error;
};

/// Raised by the trainer when a loss term evaluates to NaN/Inf.
class NonFiniteLoss : public Error {
public:
    NonFiniteLoss(std::string term, double value)
        : Error("non-finite loss term '" + term + "' = " + std::to_string(value)),
          term_(std::move(term)) {}

    const std::string& term() const { return term_; }

private:
    std::string term_;
};

}  // namespace v2xsim
