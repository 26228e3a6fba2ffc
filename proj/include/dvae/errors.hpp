#ifndef DVAE_ERRORS_HPP
#define DVAE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace dvae {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand extents do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside the domain of the function (e.g. a probability > 1).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An operation was invoked in the wrong order (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Invalid user-supplied configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Exhaustive enumeration would exceed the table guard.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Unrecognized file magic or version.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// File payload shorter than its header declares.
class LengthError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint manifest disagrees with its payload.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite objective.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace dvae

#endif  // DVAE_ERRORS_HPP
