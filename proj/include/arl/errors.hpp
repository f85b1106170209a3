#pragma once

#include <stdexcept>
#include <string>

namespace arl {

/// Bad argument values: empty trajectories, out-of-range states, NaN returns.
class InvalidInput : public std::invalid_argument {
 public:
  explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Mismatched components (policy vs. environment) or malformed experiment config.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// log pi(a|x) is not differentiable because pi(a|x) == 0.
class SingularGradient : public std::domain_error {
 public:
  explicit SingularGradient(const std::string& what) : std::domain_error(what) {}
};

/// Exhaustive enumeration would exceed the configured path budget.
class ResourceError : public std::runtime_error {
 public:
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

/// Query outside the mathematical domain (unreachable state, unsupported support).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace arl
