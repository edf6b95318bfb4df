#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kepod {

enum class ErrorKind {
  DegenerateGeometry,
  DegenerateOrbit,
  NoConvergence,
  ParseError,
  ValidationError,
  AllCoefficientsZero,
  NoAcceptedSolutions,
  SingularJacobian,
  SingularCovariance,
  GeometryRejected,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above.
class OdError : public std::runtime_error {
 public:
  OdError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace kepod
