#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dpa {

/// Base of every exception raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad or inconsistent input: malformed files, violated preconditions.
/// The CLI maps these to exit code 2.
class InputError : public Error {
public:
    using Error::Error;
};

/// A numerical routine failed on otherwise valid input. Exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

class DomainError : public InputError {
public:
    using InputError::InputError;
};

class ZeroVarianceColumn : public InputError {
public:
    explicit ZeroVarianceColumn(std::size_t column)
        : InputError("column " + std::to_string(column) + " has zero variance and cannot be scaled"),
          column_(column) {}
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t column_;
};

class AllZeroMatrix : public InputError {
public:
    AllZeroMatrix() : InputError("every column of the matrix is identically zero") {}
};

class DimensionMismatch : public InputError {
public:
    using InputError::InputError;
};

class InvalidPercentile : public InputError {
public:
    using InputError::InputError;
};

class UnknownScenario : public InputError {
public:
    explicit UnknownScenario(const std::string& name) : InputError("unknown scenario '" + name + "'") {}
};

class ParseError : public InputError {
public:
    ParseError(std::size_t row, std::size_t col, const std::string& what)
        : InputError("parse error at row " + std::to_string(row) + ", column " + std::to_string(col) + ": " + what),
          row_(row), col_(col) {}
    std::size_t row() const noexcept { return row_; }
    std::size_t col() const noexcept { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

class RaggedRows : public InputError {
public:
    RaggedRows(std::size_t row, std::size_t got, std::size_t expected)
        : InputError("row " + std::to_string(row) + " has " + std::to_string(got) + " fields, expected " +
                     std::to_string(expected)) {}
};

class ConvergenceFailure : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NoBracket : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class MaxIterations : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// lambda_1 and lambda_2 coincide to within 1e-12 relative.
class DegenerateTopPair : public NumericalError {
public:
    DegenerateTopPair() : NumericalError("top two eigenvalues are numerically equal") {}
};

class ZeroD : public NumericalError {
public:
    ZeroD() : NumericalError("D-transform evaluated to zero") {}
};

} // namespace dpa
