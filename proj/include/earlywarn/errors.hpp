#pragma once

#include <stdexcept>
#include <string>

namespace ew {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input record; carries the 1-based physical line number.
class ParseError : public Error {
 public:
  enum class Kind { malformed, range, enumeration };

  ParseError(std::size_t line, const std::string& what, Kind kind = Kind::malformed)
      : Error("line " + std::to_string(line) + ": " + what), line_(line), kind_(kind) {}
  std::size_t line() const { return line_; }
  Kind kind() const { return kind_; }

 private:
  std::size_t line_;
  Kind kind_;
};

class RangeError : public Error {
 public:
  using Error::Error;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};
class SchemaError : public Error {
 public:
  using Error::Error;
};
class ParameterError : public Error {
 public:
  using Error::Error;
};
class DomainError : public Error {
 public:
  using Error::Error;
};
class StateError : public Error {
 public:
  using Error::Error;
};
class FitError : public Error {
 public:
  using Error::Error;
};
class LookupError : public Error {
 public:
  using Error::Error;
};
class SpecError : public Error {
 public:
  using Error::Error;
};

}  // namespace ew
