#pragma once

#include <stdexcept>
#include <string>

namespace headsynth {

// Bad user-supplied arguments (shapes, ranges, enum values).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Structurally broken input files (wrong header, wrong magic, truncation).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Well-formed input that violates a domain rule (non-finite sample, empty trace).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace headsynth
