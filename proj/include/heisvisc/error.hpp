#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace heisvisc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operands live on Heisenberg groups of different dimension, or grids differ.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Expression text does not follow the grammar.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t position)
        : Error(what + " at position " + std::to_string(position)), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Evaluation hit a point where the expression (or one of its derivatives)
/// is undefined, non-finite, or not smooth.
class EvalError : public Error {
public:
    using Error::Error;
};

/// An iterative numerical routine did not converge within its cap.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// A configuration document is malformed; path names the offending field.
class SchemaError : public Error {
public:
    SchemaError(const std::string& path, const std::string& what)
        : Error(path + ": " + what), path_(path) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// A file could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace heisvisc
