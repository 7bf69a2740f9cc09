#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace worldwalk {

/// Violated precondition on a value type or operation argument.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-positive or non-finite depth handed to unprojection.
class InvalidDepth : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Malformed file, unreadable path, or failed write.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Action-script syntax error. Line and column are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column, std::string token)
      : std::runtime_error(message + " at " + std::to_string(line) + ":" + std::to_string(column) +
                           " (token '" + token + "')"),
        line_(line),
        column_(column),
        token_(std::move(token)) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  const std::string& token() const { return token_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::string token_;
};

enum class GeneratorErrorKind { kTimeout, kWrongCount, kMalformed, kProcess, kDimension };

/// Any failure inside a frame generator. Aborts the step.
class GeneratorError : public std::runtime_error {
 public:
  GeneratorError(GeneratorErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  GeneratorErrorKind kind() const { return kind_; }

 private:
  GeneratorErrorKind kind_;
};

}  // namespace worldwalk
