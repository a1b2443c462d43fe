#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wifipose {

/// Precondition on a value's domain was violated (empty path list, bad index, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Tensor or matrix dimensions do not match what an operation expects.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inconsistent or unusable configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A file exists but its contents disagree with its manifest.
class CorruptDatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required file or directory is missing.
class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A line of a text input (landmark JSON lines) could not be parsed.
class FormatError : public std::runtime_error {
 public:
  FormatError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A gradient contained NaN or Inf; the step was not applied.
class NonFiniteGradientError : public std::runtime_error {
 public:
  explicit NonFiniteGradientError(std::string tensor_name)
      : std::runtime_error("non-finite gradient in tensor '" + tensor_name + "'"),
        tensor_name_(std::move(tensor_name)) {}
  const std::string& tensor_name() const noexcept { return tensor_name_; }

 private:
  std::string tensor_name_;
};

/// Loss became NaN or Inf during training.
class TrainingDivergedError : public std::runtime_error {
 public:
  explicit TrainingDivergedError(std::size_t epoch)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch)), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

}  // namespace wifipose
