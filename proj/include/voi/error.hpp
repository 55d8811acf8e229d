#pragma once

#include <stdexcept>
#include <string>

namespace voi {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A posterior sampler could not produce usable draws.
class SamplerError : public Error {
 public:
  using Error::Error;
};

/// A regression or curve fit failed to converge.
class FitError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration. `field()` names the offending JSON field.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace voi
