#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace taylorstaff {

// Bad parameters or malformed input. Maps to CLI exit code 3.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Stationary law requested where the process is a point mass at lambda.
class DegenerateLaw : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
public:
    ParseError(std::size_t row, std::size_t column, const std::string& what)
        : ValidationError("row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + what),
          row_(row), column_(column) {}

    [[nodiscard]] std::size_t row() const noexcept { return row_; }
    [[nodiscard]] std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

// Optimizer, quadrature or stochastic approximation failed to converge. Exit code 4.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& message) {
    if (!ok) throw ValidationError(message);
}

}  // namespace taylorstaff
