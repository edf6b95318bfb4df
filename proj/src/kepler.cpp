#include "kepod/kepler.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "kepod/errors.hpp"

namespace kepod {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAngleEps = 1e-10;

// Solves M = E - e sin E.
double solve_kepler_elliptic(double mean_anomaly, double e) {
  const double m = wrap_pi(mean_anomaly);
  double ecc = e < 0.8 ? m : (m >= 0 ? std::numbers::pi : -std::numbers::pi);
  for (int it = 0; it < 100; ++it) {
    const double f = ecc - e * std::sin(ecc) - m;
    const double step = f / (1.0 - e * std::cos(ecc));
    ecc -= step;
    if (std::abs(step) < 1e-15 * (1.0 + std::abs(ecc))) break;
  }
  return ecc + (mean_anomaly - m);
}

// Solves M = e sinh H - H.
double solve_kepler_hyperbolic(double mean_anomaly, double e) {
  double h = std::asinh(mean_anomaly / e);
  for (int it = 0; it < 200; ++it) {
    const double f = e * std::sinh(h) - h - mean_anomaly;
    const double step = f / (e * std::cosh(h) - 1.0);
    h -= step;
    if (std::abs(step) < 1e-15 * (1.0 + std::abs(h))) break;
  }
  return h;
}

}  // namespace

double stumpff_c(double z) {
  if (z > 1e-3) return (1.0 - std::cos(std::sqrt(z))) / z;
  if (z < -1e-3) return (std::cosh(std::sqrt(-z)) - 1.0) / (-z);
  // 1/2! - z/4! + z^2/6! - ...
  double term = 0.5, sum = 0.0;
  for (int k = 1; k < 10; ++k) {
    sum += term;
    term *= -z / ((2.0 * k + 1.0) * (2.0 * k + 2.0));
  }
  return sum;
}

double stumpff_s(double z) {
  if (z > 1e-3) {
    const double s = std::sqrt(z);
    return (s - std::sin(s)) / (s * s * s);
  }
  if (z < -1e-3) {
    const double s = std::sqrt(-z);
    return (std::sinh(s) - s) / (s * s * s);
  }
  double term = 1.0 / 6.0, sum = 0.0;
  for (int k = 1; k < 10; ++k) {
    sum += term;
    term *= -z / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
  }
  return sum;
}

KeplerIntegrals integrals(const CartesianState& s) {
  const double rn = norm(s.r);
  KeplerIntegrals out;
  out.c = cross(s.r, s.v);
  out.energy = 0.5 * norm2(s.v) - s.mu / rn;
  out.laplace = cross(s.v, out.c) / s.mu - s.r / rn;
  return out;
}

KeplerianElements elements_from_cartesian(const CartesianState& s) {
  const KeplerIntegrals ki = integrals(s);
  const double rn = norm(s.r);
  const double cn = norm(ki.c);
  if (!(cn >= 1e-12 * rn * norm(s.v)) || cn == 0.0) {
    throw OdError(ErrorKind::DegenerateOrbit, "rectilinear state (vanishing angular momentum)");
  }
  KeplerianElements el;
  el.epoch = s.epoch;
  el.mu = s.mu;
  el.e = norm(ki.laplace);
  if (std::abs(el.e - 1.0) < 1e-12) {
    throw OdError(ErrorKind::DegenerateOrbit, "parabolic state has no semi-major axis");
  }
  el.a = -s.mu / (2.0 * ki.energy);

  const Vec3 h = ki.c / cn;
  const double sin_i = std::hypot(h.x, h.y);
  el.i = std::atan2(sin_i, h.z);
  el.Omega = sin_i < kAngleEps ? 0.0 : wrap_two_pi(std::atan2(h.x, -h.y));
  const Vec3 node{std::cos(el.Omega), std::sin(el.Omega), 0.0};
  const Vec3 ortho = cross(h, node);

  const double arg_lat = std::atan2(dot(s.r, ortho), dot(s.r, node));
  double nu = 0.0;
  if (el.e < kAngleEps) {
    el.omega = 0.0;
    nu = arg_lat;
  } else {
    el.omega = wrap_two_pi(std::atan2(dot(ki.laplace, ortho), dot(ki.laplace, node)));
    nu = arg_lat - el.omega;
  }
  nu = wrap_pi(nu);

  if (el.e < 1.0) {
    const double ecc = 2.0 * std::atan(std::sqrt((1.0 - el.e) / (1.0 + el.e)) * std::tan(0.5 * nu));
    el.ell = wrap_two_pi(ecc - el.e * std::sin(ecc));
  } else {
    const double hyp = 2.0 * std::atanh(std::sqrt((el.e - 1.0) / (el.e + 1.0)) * std::tan(0.5 * nu));
    el.ell = el.e * std::sinh(hyp) - hyp;
  }
  return el;
}

CartesianState cartesian_from_elements(const KeplerianElements& el) {
  if (std::abs(el.e - 1.0) < 1e-12) {
    throw OdError(ErrorKind::DegenerateOrbit, "parabolic elements are not supported");
  }
  const double p = el.a * (1.0 - el.e * el.e);
  if (!(p > 0.0)) throw OdError(ErrorKind::DegenerateOrbit, "a(1 - e^2) must be positive");

  double nu = 0.0;
  if (el.e < 1.0) {
    const double ecc = solve_kepler_elliptic(el.ell, el.e);
    nu = 2.0 * std::atan2(std::sqrt(1.0 + el.e) * std::sin(0.5 * ecc),
                          std::sqrt(1.0 - el.e) * std::cos(0.5 * ecc));
  } else {
    const double hyp = solve_kepler_hyperbolic(el.ell, el.e);
    nu = 2.0 * std::atan(std::sqrt((el.e + 1.0) / (el.e - 1.0)) * std::tanh(0.5 * hyp));
  }

  const double rn = p / (1.0 + el.e * std::cos(nu));
  const double vfac = std::sqrt(el.mu / p);
  const double u = el.omega + nu;

  const Vec3 node{std::cos(el.Omega), std::sin(el.Omega), 0.0};
  const Vec3 h{std::sin(el.Omega) * std::sin(el.i), -std::cos(el.Omega) * std::sin(el.i),
               std::cos(el.i)};
  const Vec3 ortho = cross(h, node);

  const Vec3 radial = std::cos(u) * node + std::sin(u) * ortho;
  const Vec3 transverse = -std::sin(u) * node + std::cos(u) * ortho;

  CartesianState s;
  s.epoch = el.epoch;
  s.mu = el.mu;
  s.r = rn * radial;
  s.v = vfac * (el.e * std::sin(nu) * radial + (1.0 + el.e * std::cos(nu)) * transverse);
  return s;
}

CartesianState propagate(const CartesianState& s, double dt) {
  CartesianState out = s;
  out.epoch = s.epoch + dt;
  if (dt == 0.0) return out;

  const double mu = s.mu;
  const double sqmu = std::sqrt(mu);
  const double r0 = norm(s.r);
  if (!(r0 > 0.0)) throw OdError(ErrorKind::DegenerateOrbit, "zero position vector");
  const double vr0 = dot(s.r, s.v) / r0;
  const double alpha = 2.0 / r0 - norm2(s.v) / mu;  // 1/a

  // Whole revolutions do not change the state.
  double tof = dt;
  if (alpha > 0.0) {
    const double period = kTwoPi / (sqmu * alpha * std::sqrt(alpha));
    tof = std::fmod(dt, period);
  }

  // F(x) = r0 vr0/sqrt(mu) x^2 C + (1 - alpha r0) x^3 S + r0 x - sqrt(mu) tof,
  // with dF/dx = r(x) > 0, so F is monotone and a bracket always exists.
  auto eval = [&](double x, double& f, double& fp) {
    const double z = alpha * x * x;
    const double c = stumpff_c(z), sz = stumpff_s(z);
    f = r0 * vr0 / sqmu * x * x * c + (1.0 - alpha * r0) * x * x * x * sz + r0 * x - sqmu * tof;
    fp = r0 * vr0 / sqmu * x * (1.0 - z * sz) + (1.0 - alpha * r0) * x * x * c + r0;
  };

  double x = sqmu * std::abs(alpha) * tof;
  if (alpha < 0.0) {
    // Logarithmic starter for hyperbolic arcs; the linear one lands far up the
    // exponential wall on long arcs.
    const double a = 1.0 / alpha;
    const double sgn = tof > 0 ? 1.0 : -1.0;
    const double den = r0 * vr0 + sgn * std::sqrt(-mu * a) * (1.0 - r0 * alpha);
    const double arg = -2.0 * mu * alpha * tof / den;
    x = arg > 0.0 ? sgn * std::sqrt(-a) * std::log(arg) : sqmu * tof / r0;
  }
  if (alpha == 0.0 || !std::isfinite(x)) x = sqmu * tof / r0;

  double lo = 0.0, hi = 0.0;
  {
    double f = 0.0, fp = 0.0;
    double step = std::abs(x) > 0 ? std::abs(x) : 1e-3;
    const double dir = tof > 0 ? 1.0 : -1.0;
    // F(0) = -sqrt(mu) tof has the sign opposite to tof.
    double b = dir * step;
    for (int k = 0; k < 200; ++k) {
      eval(b, f, fp);
      if (dir * f >= 0.0) break;
      b *= 2.0;
    }
    lo = std::min(0.0, b);
    hi = std::max(0.0, b);
  }
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);

  // Newton, falling back to bisection whenever the step would leave the
  // bracket or fails to halve the previous one.
  bool converged = false;
  double dx_old = hi - lo, dx = dx_old;
  for (int it = 0; it < 60; ++it) {
    double f = 0.0, fp = 0.0;
    eval(x, f, fp);
    if (f == 0.0) {
      converged = true;
      break;
    }
    if (f < 0.0) lo = x; else hi = x;
    const double next = x - f / fp;
    if (!(next > lo && next < hi) || std::abs(2.0 * f) > std::abs(dx_old * fp)) {
      dx_old = dx;
      dx = 0.5 * (hi - lo);
      x = lo + dx;
    } else {
      dx_old = dx;
      dx = x - next;
      x = next;
    }
    if (std::abs(dx) <= 1e-13 * std::max(1.0, std::abs(x)) || hi - lo <= 1e-15 * std::max(1.0, std::abs(x))) {
      converged = true;
      break;
    }
  }
  if (!converged) throw OdError(ErrorKind::NoConvergence, "universal Kepler equation did not converge");

  const double z = alpha * x * x;
  const double c = stumpff_c(z), sz = stumpff_s(z);
  const double f = 1.0 - x * x / r0 * c;
  const double g = tof - x * x * x / sqmu * sz;
  out.r = f * s.r + g * s.v;
  const double rn = norm(out.r);
  const double fdot = sqmu / (rn * r0) * (z * x * sz - x);
  const double gdot = 1.0 - x * x / rn * c;
  out.v = fdot * s.r + gdot * s.v;
  return out;
}

LightCorrectedEpochs light_corrected_epochs(const ODInput& input, double rho2) {
  if (input.c_light == 0.0) return {input.p1.epoch, input.a2.epoch};
  return {input.p1.epoch - input.p1.rho / input.c_light, input.a2.epoch - rho2 / input.c_light};
}

}  // namespace kepod
