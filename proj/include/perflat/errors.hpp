#pragma once

#include <stdexcept>
#include <string>

namespace perflat {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// A structural invariant of an input object does not hold.
class ValidationError : public Error {
 public:
  ValidationError(std::string invariant, const std::string& message)
      : Error(message), invariant_(std::move(invariant)) {}
  const char* kind() const noexcept override { return "validation"; }
  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

/// An argument lies outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

/// Malformed serialized input; `field` is a JSON pointer-ish path.
class ParseError : public Error {
 public:
  ParseError(std::string field, const std::string& message, long line = -1)
      : Error(message), field_(std::move(field)), line_(line) {}
  const char* kind() const noexcept override { return "parse"; }
  const std::string& field() const noexcept { return field_; }
  long line() const noexcept { return line_; }

 private:
  std::string field_;
  long line_;
};

/// A measure or solver broke a property it is supposed to have.
class InconsistencyError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "inconsistency"; }
};

}  // namespace perflat
