#include "kepod/geom3.hpp"

#include <numbers>

#include "kepod/errors.hpp"

namespace kepod {

LosBasis los_basis(double alpha, double delta) {
  if (!(std::abs(delta) < std::numbers::pi / 2 - 1e-12)) {
    throw OdError(ErrorKind::DegenerateGeometry, "line of sight at or beyond the pole");
  }
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cd = std::cos(delta), sd = std::sin(delta);
  return LosBasis{
      .rho = {cd * ca, cd * sa, sd},
      .alpha = {-sa, ca, 0.0},
      .delta = {-sd * ca, -sd * sa, cd},
  };
}

double wrap_pi(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(angle, two_pi);
  if (w <= -std::numbers::pi) w += two_pi;
  if (w > std::numbers::pi) w -= two_pi;
  return w;
}

double wrap_two_pi(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double w = std::fmod(angle, two_pi);
  if (w < 0.0) w += two_pi;
  if (w >= two_pi) w -= two_pi;
  return w;
}

}  // namespace kepod
