#pragma once

#include <stdexcept>
#include <string>

namespace anisonet {

/// Base class of every error raised by the core library. The C API maps each
/// subclass onto one status code.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// Malformed file contents.
class ParseError : public Error {
public:
  using Error::Error;
};

/// Invalid mesh connectivity or degenerate elements.
class TopologyError : public Error {
public:
  using Error::Error;
};

/// A precondition on an argument was violated (shape mismatch, range, ...).
class InvalidArgument : public Error {
public:
  using Error::Error;
};

/// Numerical failure: non-SPD tensor, zero-magnitude direction, ...
class NumericError : public Error {
public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class TrainingDiverged : public Error {
public:
  using Error::Error;
};

} // namespace anisonet
