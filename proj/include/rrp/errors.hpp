#pragma once

#include <stdexcept>
#include <string>

namespace rrp {

/// Base class for all errors thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Mismatched matrix/vector shapes. Message names the offending axes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument values (non-finite entries, out-of-range parameters).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Cholesky factorization failed at every jitter level.
class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(const std::string& what, double last_pivot)
      : Error(what), last_pivot_(last_pivot) {}
  double last_pivot() const { return last_pivot_; }

 private:
  double last_pivot_;
};

/// Numerical optimization produced a non-finite objective or diverged.
class OptimizationFailed : public Error {
 public:
  using Error::Error;
};

/// Every entry of a pursuit trace failed to fit.
class PursuitFailed : public Error {
 public:
  using Error::Error;
};

}  // namespace rrp
