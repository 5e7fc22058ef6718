#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace adx {

// Base of every error raised by the toolkit. The CLI maps IoError to exit
// code 3 and every other Error to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class SpecError : public Error {
public:
    using Error::Error;
};

// A regressor that carries no within-site variation.
class DegenerateColumnError : public Error {
public:
    using Error::Error;
};

class SingularDesignError : public Error {
public:
    using Error::Error;
};

class InferenceError : public Error {
public:
    using Error::Error;
};

class LookupError : public Error {
public:
    using Error::Error;
};

class AlignmentError : public Error {
public:
    using Error::Error;
};

// Row-level validation failure while reading a delimited file. `row` is the
// 1-based line number in the file (the header is line 1).
class ValidationError : public Error {
public:
    ValidationError(std::size_t row, const std::string& what)
        : Error("line " + std::to_string(row) + ": " + what), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace adx
