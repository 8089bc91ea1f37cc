#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chainmetric {

enum class ErrorKind {
  NotStochastic,
  NotIrreducible,
  NotReversible,
  InvalidDensity,
  InvalidAlpha,
  InvalidArgument,
  MissingCapability,
  EndpointMiss,
  RankMismatch,
  NotInRange,
  BoundViolated,
  InfeasibleEndpoints,
  Stalled,
  ShootingDiverged,
  BoundaryDensity,
  DegenerateDistance,
};

std::string_view kind_name(ErrorKind kind);

// Carries an optional numeric payload: the offending residual, margin or best value.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, double value = 0.0)
      : std::runtime_error(message), kind_(kind), value_(value) {}

  ErrorKind kind() const { return kind_; }
  double value() const { return value_; }

 private:
  ErrorKind kind_;
  double value_;
};

}  // namespace chainmetric
