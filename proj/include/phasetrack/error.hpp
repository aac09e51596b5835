#pragma once

#include <stdexcept>
#include <string>

namespace phasetrack {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: bad parameter values, unknown or missing config keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical failure inside a module. The message is prefixed with the
/// module name so the CLI can report where it happened.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& module, const std::string& what)
      : Error(module + ": " + what), module_(module) {}

  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

}  // namespace phasetrack
