#pragma once

#include <stdexcept>
#include <string>

namespace m2ad {

// Bad caller input: dimensions, ranges, unknown options. CLI exit code 2.
class ArgumentError : public std::invalid_argument {
public:
    explicit ArgumentError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Malformed input files (CSV cells, timestamps, JSON). CLI exit code 2.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally wrong data: duplicate columns, missing columns, bad layout. CLI exit code 2.
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure: diverged training, degenerate calibration, quadrature
// breakdown. CLI exit code 3.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace m2ad
