#pragma once

#include <stdexcept>
#include <string>

namespace degenbranch {

// Root of the library's exception hierarchy. Every failure raised by the
// library derives from this so callers can catch one type at the boundary.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A parameter lies outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A quadrature or cross-check failed to reach its accuracy target.
class NumericAccuracyError : public Error {
 public:
  NumericAccuracyError(const std::string& what, double achieved_bound)
      : Error(what), achieved_bound_(achieved_bound) {}

  double achieved_bound() const noexcept { return achieved_bound_; }

 private:
  double achieved_bound_;
};

// The anisotropy regime does not support the requested quantity.
class UnsupportedRegimeError : public Error {
 public:
  using Error::Error;
};

// The requested integral does not converge for these indices.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

// A replicate generated more particles than the configured cap.
class PopulationExplosionError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration document. `path` is a JSON-pointer-like location
// such as "$.phi.widths[0]".
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace degenbranch
