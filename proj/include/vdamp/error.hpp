#pragma once

#include <stdexcept>
#include <string>

namespace vdamp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (t < 0, reversed
/// interval, unsupported order, dimension mismatch, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Operation not available for this input, e.g. critical point enumeration
/// of a custom multi-dimensional potential.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

enum class SolverFailure { MaxStepsExceeded, StepUnderflow, NonFiniteState };

const char* to_string(SolverFailure kind) noexcept;

class SolverError : public Error {
 public:
  SolverError(SolverFailure kind, const std::string& what)
      : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  SolverFailure kind() const noexcept { return kind_; }

 private:
  SolverFailure kind_;
};

/// Configuration file problem. `line` is 1-based, 0 when not tied to a line.
class ConfigError : public Error {
 public:
  ConfigError(int line, std::string key, const std::string& what)
      : Error(format(line, key, what)), line_(line), key_(std::move(key)) {}

  int line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

 private:
  static std::string format(int line, const std::string& key, const std::string& what) {
    std::string out = line > 0 ? "line " + std::to_string(line) + ": " : std::string();
    if (!key.empty()) out += "'" + key + "': ";
    return out + what;
  }

  int line_;
  std::string key_;
};

}  // namespace vdamp
