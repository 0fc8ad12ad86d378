#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace semtag {

// Root of every error the library raises. Validation errors are problems
// with user-supplied input (files, configs, arguments); everything else is a
// runtime failure. The CLI maps the two onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual bool is_validation() const noexcept { return false; }
};

class ValidationError : public Error {
 public:
  using Error::Error;
  bool is_validation() const noexcept override { return true; }
};

// Precondition violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DegenerateMaskError : public ContractError {
 public:
  using ContractError::ContractError;
};

// Malformed input with a 1-based line number.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class CountError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class LookupError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class AlignmentError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class TrainingDivergence : public Error {
 public:
  TrainingDivergence(std::size_t epoch, std::size_t batch)
      : Error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
              std::to_string(batch)),
        epoch_(epoch),
        batch_(batch) {}
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

}  // namespace semtag
