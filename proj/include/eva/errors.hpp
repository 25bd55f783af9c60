#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace eva {

/// Base class for every error raised by the library. `component()` names the
/// subsystem that raised it so the CLI can report it without parsing text.
class Error : public std::runtime_error {
 public:
  Error(std::string component, const std::string& what)
      : std::runtime_error(component + ": " + what), component_(std::move(component)) {}

  const std::string& component() const noexcept { return component_; }

 private:
  std::string component_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error("dimension", what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error("numeric", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class StateError : public Error {
 public:
  explicit StateError(const std::string& what) : Error("state", what) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error("input", what) {}
};

class LabelError : public Error {
 public:
  explicit LabelError(const std::string& what) : Error("label", what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error("data", what) {}
};

class SamplingError : public Error {
 public:
  explicit SamplingError(const std::string& what) : Error("sampling", what) {}
};

/// Malformed dataset or checkpoint file. Carries the byte offset at which
/// decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error("format", what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Training aborted on a non-finite loss component.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& loss_component, std::size_t step, const std::string& what)
      : Error("trainer", what + " [component=" + loss_component + ", step=" +
                             std::to_string(step) + "]"),
        loss_component_(loss_component),
        step_(step) {}

  const std::string& loss_component() const noexcept { return loss_component_; }
  std::size_t step() const noexcept { return step_; }

 private:
  std::string loss_component_;
  std::size_t step_;
};

std::string shape_to_string(const std::vector<std::size_t>& shape);

}  // namespace eva
