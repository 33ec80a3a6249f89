#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace recbench {

// Caller supplied something invalid: bad arguments, bad config, bad input data.
// The CLI maps this family to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ArgumentError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class RangeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptyDatasetError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Failures that happen while doing the work. CLI exit code 2.
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

class IoError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

class SolverError : public RuntimeError {
 public:
  SolverError(std::size_t row, const std::string& what)
      : RuntimeError("normal equations for row " + std::to_string(row) + ": " + what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class TrainingDiverged : public RuntimeError {
 public:
  explicit TrainingDiverged(int epoch)
      : RuntimeError("training diverged at epoch " + std::to_string(epoch)), epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace recbench
