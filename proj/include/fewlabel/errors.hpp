#pragma once

#include <stdexcept>
#include <string>

namespace fewlabel {

/// Base class for all recoverable errors raised by this library. The CLI maps
/// these to exit code 2 (user/data error); anything else is an internal error.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Too few observations for the requested statistic or fit.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// Paired inputs whose lengths disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid distribution specification (negative or non-normalized cells).
class SpecError : public Error {
public:
    using Error::Error;
};

/// Malformed dataset or report file.
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// The iterative fit hit a non-finite objective.
class OptimizationDivergedError : public Error {
public:
    using Error::Error;
};

/// A formula was evaluated at a point where it is singular (zero variance).
class DegenerateVarianceError : public Error {
public:
    using Error::Error;
};

} // namespace fewlabel
