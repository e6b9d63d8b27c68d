#pragma once

#include <stdexcept>
#include <string>

namespace berezin {

// Base of every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the domain of a function (outside a sampled box, +inf where finite needed).
class DomainError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

// A complex value was fed where a real one is required (1D convex function, Hermitian pipeline).
class ShapeError : public Error {
public:
    using Error::Error;
};

class NotDifferentiableError : public Error {
public:
    using Error::Error;
};

class WitnessError : public Error {
public:
    using Error::Error;
};

// Eigensolver failure, certificate failure, conditioning problems.
class NumericError : public Error {
public:
    using Error::Error;
};

class ConditioningError : public NumericError {
public:
    using NumericError::NumericError;
};

class UnsupportedTauError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class TruncationError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class StrongConvexityError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace berezin
