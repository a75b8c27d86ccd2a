#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace graphfv {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Structural problem in a graph description.
class GraphError : public Error {
public:
    using Error::Error;
};

/// Internal node carrying incoming flux but no outgoing speed.
class StagnantJunctionError : public Error {
public:
    StagnantJunctionError(std::size_t node, const std::string& what)
        : Error(what), node_(node) {}
    std::size_t node() const noexcept { return node_; }

private:
    std::size_t node_;
};

/// Zero pivot during factorization.
class SingularMatrixError : public Error {
public:
    SingularMatrixError(std::size_t pivot, const std::string& what)
        : Error(what), pivot_(pivot) {}
    std::size_t pivot() const noexcept { return pivot_; }

private:
    std::size_t pivot_;
};

/// Malformed input text; line is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Negative value produced from nonnegative data in strict mode.
class PositivityError : public Error {
public:
    PositivityError(double time, double min_value, const std::string& what)
        : Error(what), time_(time), min_value_(min_value) {}
    double time() const noexcept { return time_; }
    double min_value() const noexcept { return min_value_; }

private:
    double time_;
    double min_value_;
};

}  // namespace graphfv
