#pragma once

#include <stdexcept>
#include <string>

namespace cfk {

/// Base of every error raised by the library. Each subclass names one
/// failure mode from the public contract so callers can dispatch on type.
class Error : public std::runtime_error {
 public:
  Error(const std::string& kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), message_(message) {}
  /// The description without the error-kind prefix.
  const std::string& message() const { return message_; }

 private:
  std::string message_;
};

#define CFK_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                   \
   public:                                                      \
    explicit Name(const std::string& what) : Error(#Name, what) {}    \
  }

/// |grad r| fell below tol_grad: the point is outside the valid band.
CFK_DEFINE_ERROR(DegenerateGradient);
/// |zeta - z| below the coincidence floor where jets are singular.
CFK_DEFINE_ERROR(CoincidentPoints);
CFK_DEFINE_ERROR(DimensionMismatch);
CFK_DEFINE_ERROR(DegreeMismatch);
CFK_DEFINE_ERROR(OffBoundary);
CFK_DEFINE_ERROR(NotStrictlyPseudoconvex);
CFK_DEFINE_ERROR(UnsupportedDomain);
CFK_DEFINE_ERROR(NonFiniteDensity);
CFK_DEFINE_ERROR(PointTooClose);
/// A refinement study did not settle within its level budget.
CFK_DEFINE_ERROR(QuadratureNonConvergence);
CFK_DEFINE_ERROR(ConfigError);
/// An internal identity (Hermitian symmetry, reality of a form) failed.
CFK_DEFINE_ERROR(InvariantViolation);

#undef CFK_DEFINE_ERROR

}  // namespace cfk
