#include "kepod/errors.hpp"

namespace kepod {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorKind::DegenerateOrbit: return "DegenerateOrbit";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::AllCoefficientsZero: return "AllCoefficientsZero";
    case ErrorKind::NoAcceptedSolutions: return "NoAcceptedSolutions";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::SingularCovariance: return "SingularCovariance";
    case ErrorKind::GeometryRejected: return "GeometryRejected";
  }
  return "Unknown";
}

}  // namespace kepod
