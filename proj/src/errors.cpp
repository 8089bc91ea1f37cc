#include "chainmetric/errors.hpp"

namespace chainmetric {

std::string_view kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotStochastic: return "NotStochastic";
    case ErrorKind::NotIrreducible: return "NotIrreducible";
    case ErrorKind::NotReversible: return "NotReversible";
    case ErrorKind::InvalidDensity: return "InvalidDensity";
    case ErrorKind::InvalidAlpha: return "InvalidAlpha";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::MissingCapability: return "MissingCapability";
    case ErrorKind::EndpointMiss: return "EndpointMiss";
    case ErrorKind::RankMismatch: return "RankMismatch";
    case ErrorKind::NotInRange: return "NotInRange";
    case ErrorKind::BoundViolated: return "BoundViolated";
    case ErrorKind::InfeasibleEndpoints: return "InfeasibleEndpoints";
    case ErrorKind::Stalled: return "Stalled";
    case ErrorKind::ShootingDiverged: return "ShootingDiverged";
    case ErrorKind::BoundaryDensity: return "BoundaryDensity";
    case ErrorKind::DegenerateDistance: return "DegenerateDistance";
  }
  return "Unknown";
}

}  // namespace chainmetric
