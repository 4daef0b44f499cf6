#pragma once

#include <stdexcept>
#include <string>

namespace play {

// Base for every error raised by the library. `field` names the offending
// input (JSON field, element index, CLI flag) when there is one.
class Error : public std::runtime_error {
public:
  Error(const std::string& message, std::string field = {})
      : std::runtime_error(message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }
  virtual const char* code() const noexcept { return "error"; }

private:
  std::string field_;
};

class ValidationError : public Error {
public:
  using Error::Error;
  const char* code() const noexcept override { return "validation_error"; }
};

class InvalidArgument : public Error {
public:
  using Error::Error;
  const char* code() const noexcept override { return "invalid_argument"; }
};

class CapacityError : public Error {
public:
  using Error::Error;
  const char* code() const noexcept override { return "capacity_error"; }
};

class NumericalError : public Error {
public:
  using Error::Error;
  const char* code() const noexcept override { return "numerical_error"; }
};

class SchemaError : public Error {
public:
  using Error::Error;
  const char* code() const noexcept override { return "schema_error"; }
};

// The two errors the editing endpoints must tell apart from plain bad input.
class CountMismatch : public InvalidArgument {
public:
  using InvalidArgument::InvalidArgument;
  const char* code() const noexcept override { return "count_mismatch"; }
};

}  // namespace play
