#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdwave {

/// Base class of everything the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration (bad lengths, p <= 2, r < 2, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. combining fields that live on different domains.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Iterative method failed to converge or broke down.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition of a bound or construction does not hold.
class PreconditionError : public Error {
 public:
  PreconditionError(const std::string& what, double value)
      : Error(what), value_(value) {}

  /// The offending quantity (e.g. the criterion margin).
  double value() const noexcept { return value_; }

 private:
  double value_;
};

/// Expression text could not be parsed.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : Error(message + " at offset " + std::to_string(offset)),
        message_(message),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string message_;
  std::size_t offset_;
};

/// Expression evaluated outside its domain (log of non-positive, x/0, ...).
class DomainFault : public Error {
 public:
  using Error::Error;
};

}  // namespace sdwave
