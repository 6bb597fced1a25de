#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace handover {

/// Base class of every error raised by the handover library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InapplicableAction : public Error {
 public:
  using Error::Error;
};

/// Malformed document. `line` and `column` are 1-based; 0 when unknown.
class SyntaxError : public Error {
 public:
  SyntaxError(std::string message, std::size_t line, std::size_t column)
      : Error(message + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Semantically invalid value; `field()` is a path such as `segments[0].tags`.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Query text that does not match the formula grammar. `offset` is 0-based.
class QuerySyntaxError : public Error {
 public:
  QuerySyntaxError(const std::string& message, std::size_t offset)
      : Error(message + " at offset " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class NonChainingUntil : public QuerySyntaxError {
 public:
  explicit NonChainingUntil(std::size_t offset)
      : QuerySyntaxError("U[<=k] does not chain; add parentheses", offset) {}
};

class UnknownAtom : public Error {
 public:
  explicit UnknownAtom(std::string name, std::size_t line = 0)
      : Error("unknown atom '" + name + "'" +
              (line == 0 ? std::string() : " on line " + std::to_string(line))),
        name_(std::move(name)),
        line_(line) {}

  const std::string& name() const noexcept { return name_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string name_;
  std::size_t line_;
};

class MissingTemplate : public Error {
 public:
  using Error::Error;
};

class MissingEntry : public Error {
 public:
  using Error::Error;
};

class InvalidTransition : public Error {
 public:
  InvalidTransition(const std::string& message, std::string state)
      : Error(message), state_(std::move(state)) {}

  /// Machine state at the time of the rejected request.
  const std::string& state() const noexcept { return state_; }

 private:
  std::string state_;
};

class SessionFinished : public Error {
 public:
  SessionFinished() : Error("session is finished") {}
};

}  // namespace handover
