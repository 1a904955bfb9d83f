#pragma once

#include <stdexcept>
#include <string>

namespace volexp {

// Thrown when a singular kernel is evaluated at its singularity.
class SingularKernelError : public std::domain_error {
 public:
  explicit SingularKernelError(const std::string& msg) : std::domain_error(msg) {}
};

// Configuration / wiring problems (bad field values, missing callbacks).
// `path` carries the offending field for CLI diagnostics, e.g. "model.kernel.phi".
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::string path, const std::string& msg)
      : std::invalid_argument(path + ": " + msg), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// Numerical failure (e.g. a covariance factorization that does not go through).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace volexp
