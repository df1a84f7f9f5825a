#pragma once

#include <stdexcept>
#include <string>

namespace trimer {

/// Bad caller input: out-of-range index, inconsistent sizes, invalid parameters.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine did not meet its accuracy contract.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// An energy window or sample pool that selected nothing.
class EmptySelection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Phase-space point outside the simplex p1, p2 >= 0, p1 + p2 <= 1.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Hamilton's equations evaluated on a simplex face where a coupling term diverges.
class GradientSingularity : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Unreadable, corrupt or stale eigenpair cache file.
class CacheError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace trimer
