#pragma once

#include "kepod/geom3.hpp"
#include "kepod/observations.hpp"

namespace kepod {

struct CartesianState {
  Vec3 r;  // au
  Vec3 v;  // au/day
  double epoch = 0.0;
  double mu = kGaussMu;
};

/// Osculating elements.  `a` is negative on hyperbolic orbits; `ell` is the
/// mean anomaly (e sinh H - H on hyperbolic orbits, unwrapped there).
///
/// Degenerate-angle conventions, fixed so elements compare deterministically:
///   sin(i) < 1e-10  =>  Omega := 0 (node taken on the x axis)
///   e < 1e-10       =>  omega := 0 (anomaly counted from the node)
struct KeplerianElements {
  double a = 0.0;
  double e = 0.0;
  double i = 0.0;
  double Omega = 0.0;
  double omega = 0.0;
  double ell = 0.0;
  double epoch = 0.0;
  double mu = kGaussMu;
};

struct KeplerIntegrals {
  Vec3 c;          // angular momentum r x v
  double energy;   // |v|^2/2 - mu/|r|
  Vec3 laplace;    // (v x c)/mu - r/|r|
};

KeplerIntegrals integrals(const CartesianState& s);

/// Throws DegenerateOrbit for rectilinear (|c| < 1e-12 |r||v|) or parabolic states.
KeplerianElements elements_from_cartesian(const CartesianState& s);
CartesianState cartesian_from_elements(const KeplerianElements& el);

/// Two-body propagation by dt days (either sign) with universal variables.
/// Throws NoConvergence if the universal Kepler equation does not settle.
CartesianState propagate(const CartesianState& s, double dt);

struct LightCorrectedEpochs {
  double t1;
  double t2;
};

/// t1 - rho1/c and t2bar - rho2/c; c == 0 leaves the epochs geometric.
LightCorrectedEpochs light_corrected_epochs(const ODInput& input, double rho2);

/// Stumpff functions C(z), S(z).
double stumpff_c(double z);
double stumpff_s(double z);

}  // namespace kepod
