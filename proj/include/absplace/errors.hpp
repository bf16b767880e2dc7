#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace absplace {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class EmptyFlightGridError : public Error {
public:
    EmptyFlightGridError() : Error("flight grid is empty after applying exclusions") {}
};

/// Malformed input file. `line()` is 1-based, 0 when the error is not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// No rate allocation can satisfy the constraints. Carries the offending
/// ground-terminal index when a single row is to blame.
class InfeasibleError : public Error {
public:
    explicit InfeasibleError(const std::string& what, std::optional<std::size_t> gt = std::nullopt)
        : Error(what), gt_(gt) {}

    std::optional<std::size_t> gt_index() const noexcept { return gt_; }

private:
    std::optional<std::size_t> gt_;
};

/// A root-finding bracket did not contain the target, or the simplex hit
/// a numerical breakdown.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what, double f_lo = 0.0, double f_hi = 0.0)
        : Error(what), f_lo_(f_lo), f_hi_(f_hi) {}

    double f_lo() const noexcept { return f_lo_; }
    double f_hi() const noexcept { return f_hi_; }

private:
    double f_lo_;
    double f_hi_;
};

class BudgetError : public Error {
public:
    using Error::Error;
};

} // namespace absplace
