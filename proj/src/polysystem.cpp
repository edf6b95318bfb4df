#include "kepod/polysystem.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "kepod/errors.hpp"

namespace kepod {

namespace {

QRow project(const GeometrySet& g, const Vec3& w) {
  return QRow{.c100 = dot(g.N1, w),
              .c010 = dot(g.O1, w),
              .c002 = -dot(g.E2, w),
              .c001 = -dot(g.F2, w),
              .c000 = dot(g.P1vec - g.G2, w)};
}

double rho_part(const QRow& q, double rho2) { return (q.c002 * rho2 + q.c001) * rho2 + q.c000; }

BiPoly rho_part_poly(const QRow& q) {
  BiPoly p(0, 2);
  p.at(0, 0) = q.c000;
  p.at(0, 1) = q.c001;
  p.at(0, 2) = q.c002;
  return p;
}

void require_nondegenerate(const EliminationCoeffs& c) {
  if (c.degenerate()) throw OdError(ErrorKind::DegenerateGeometry, c.degeneracy_reason());
}

}  // namespace

GeometrySet build_geometry(const ODInput& input) {
  const AssembledStates s = assemble_states(input);
  const LosBasis& b1 = s.basis1;
  const LosBasis& b2 = s.basis2;
  const Vec3& q2 = input.obs2.q;
  const double rate_a = input.a2.alphadot * std::cos(input.a2.delta);
  const double rate_d = input.a2.deltadot;

  GeometrySet g;
  g.D1 = cross(input.obs1.q, b1.rho);
  g.D2 = cross(q2, b2.rho);
  g.W12 = cross(g.D1, g.D2);
  g.N1 = cross(s.r1, b1.alpha);
  g.O1 = cross(s.r1, b1.delta);
  g.P1vec = cross(s.r1, input.obs1.qdot);
  g.E2 = rate_a * b2.delta - rate_d * b2.alpha;
  g.F2 = rate_a * cross(q2, b2.alpha) + rate_d * cross(q2, b2.delta) + cross(b2.rho, input.obs2.qdot);
  g.G2 = cross(q2, input.obs2.qdot);
  return g;
}

std::string EliminationCoeffs::degeneracy_reason() const {
  std::string out;
  if (w12_small) out += "|W12|^2 below threshold (D1 parallel to D2)";
  if (pivot_small) {
    if (!out.empty()) out += "; ";
    out += "Q1_100 and Q1_010 both below threshold (r1.D2 = 0 or D1 = 0)";
  }
  return out;
}

EliminationCoeffs build_elimination(const ODInput& input, const GeometrySet& geom) {
  EliminationCoeffs c;
  c.q1 = project(geom, geom.W12);
  c.q2 = project(geom, cross(geom.D1, geom.W12));
  c.q3 = project(geom, cross(geom.D2, geom.W12));
  c.w2 = norm2(geom.W12);

  const Vec3 r1 = assemble_states(input).r1;
  // |D_j| <= |q_j|, so the observer distances set a scale that does not
  // shrink with the quantities being tested.
  const double s1 = norm(input.obs1.q), s2 = norm(input.obs2.q);
  c.w_threshold = 1e-12 * s1 * s1 * s2 * s2;
  c.q_threshold = 1e-12 * norm(r1) * s1 * s2;
  c.w12_small = !(c.w2 > c.w_threshold);
  c.pivot_small = !(std::max(std::abs(c.q1.c100), std::abs(c.q1.c010)) > c.q_threshold);
  c.free = std::abs(c.q1.c010) > std::abs(c.q1.c100) ? FreeVariable::Xi1 : FreeVariable::Zeta1;
  return c;
}

LinearSolution eliminate_linear(const EliminationCoeffs& c, double zeta1, double rho2) {
  require_nondegenerate(c);
  const double q100 = c.q1.c100;
  if (!(std::abs(q100) > c.q_threshold)) {
    throw OdError(ErrorKind::DegenerateGeometry, "Q1_100 below threshold; use the swapped pivot");
  }
  const double h1 = rho_part(c.q1, rho2);
  const double h2 = rho_part(c.q2, rho2);
  const double h3 = rho_part(c.q3, rho2);
  const double denom = c.w2 * q100;

  LinearSolution s;
  s.zeta1 = zeta1;
  s.xi1 = -(c.q1.c010 * zeta1 + h1) / q100;
  s.rhodot1 = -((c.q3.c010 * q100 - c.q1.c010 * c.q3.c100) * zeta1 + (h3 * q100 - h1 * c.q3.c100)) / denom;
  s.rhodot2 = -((c.q2.c010 * q100 - c.q1.c010 * c.q2.c100) * zeta1 + (h2 * q100 - h1 * c.q2.c100)) / denom;
  return s;
}

LinearSolution eliminate_linear_swapped(const EliminationCoeffs& c, double xi1, double rho2) {
  require_nondegenerate(c);
  const double q010 = c.q1.c010;
  if (!(std::abs(q010) > c.q_threshold)) {
    throw OdError(ErrorKind::DegenerateGeometry, "Q1_010 below threshold; use the direct pivot");
  }
  const double h1 = rho_part(c.q1, rho2);
  const double h2 = rho_part(c.q2, rho2);
  const double h3 = rho_part(c.q3, rho2);
  const double denom = c.w2 * q010;

  LinearSolution s;
  s.xi1 = xi1;
  s.zeta1 = -(c.q1.c100 * xi1 + h1) / q010;
  s.rhodot1 = -((c.q3.c100 * q010 - c.q1.c100 * c.q3.c010) * xi1 + (h3 * q010 - h1 * c.q3.c010)) / denom;
  s.rhodot2 = -((c.q2.c100 * q010 - c.q1.c100 * c.q2.c010) * xi1 + (h2 * q010 - h1 * c.q2.c010)) / denom;
  return s;
}

LinearSolution eliminate_free(const EliminationCoeffs& c, double t, double rho2) {
  return c.free == FreeVariable::Zeta1 ? eliminate_linear(c, t, rho2)
                                       : eliminate_linear_swapped(c, t, rho2);
}

EliminatedForms eliminated_forms(const EliminationCoeffs& c) {
  require_nondegenerate(c);
  EliminatedForms f;
  const BiPoly t = BiPoly::monomial(1.0, 1, 0);
  if (c.free == FreeVariable::Zeta1) {
    f.zeta1 = t;
    f.xi1 = (t * c.q1.c010 + rho_part_poly(c.q1)) * (-1.0 / c.q1.c100);
  } else {
    f.xi1 = t;
    f.zeta1 = (t * c.q1.c100 + rho_part_poly(c.q1)) * (-1.0 / c.q1.c010);
  }
  f.rhodot1 = (f.xi1 * c.q3.c100 + f.zeta1 * c.q3.c010 + rho_part_poly(c.q3)) * (-1.0 / c.w2);
  f.rhodot2 = (f.xi1 * c.q2.c100 + f.zeta1 * c.q2.c010 + rho_part_poly(c.q2)) * (-1.0 / c.w2);
  return f;
}

double BivariatePair::q5(double t, double rho2) const {
  return poly1::eval(p5_t, rho2) * t + poly1::eval(p5_0, rho2);
}

double BivariatePair::p6(double t, double rho2) const {
  return (p6_tt * t + poly1::eval(p6_t, rho2)) * t + poly1::eval(p6_0, rho2);
}

namespace {

struct ManifoldPolys {
  VecBiPoly r1, v1, r2, v2;
  double mu_r1 = 0.0;
  Vec3 r1_cross_e2;
};

ManifoldPolys manifold_polys(const ODInput& input, const EliminationCoeffs& coeffs) {
  const EliminatedForms f = eliminated_forms(coeffs);
  const AssembledStates s = assemble_states(input);
  const BiPoly rho = BiPoly::monomial(1.0, 0, 1);
  ManifoldPolys m;
  m.mu_r1 = input.mu / norm(s.r1);
  m.r1_cross_e2 = cross(s.r1, s.basis2.rho);
  m.r1 = constant_vec(s.r1);
  m.v1 = constant_vec(input.obs1.qdot) + times(f.rhodot1, s.basis1.rho) +
         times(f.xi1, s.basis1.alpha) + times(f.zeta1, s.basis1.delta);
  m.r2 = constant_vec(input.obs2.q) + times(rho, s.basis2.rho);
  m.v2 = constant_vec(input.obs2.qdot) + times(f.rhodot2, s.basis2.rho) + times(rho, s.e_perp2);
  return m;
}

BivariatePair extract(const BiPoly& q5, const BiPoly& p6, FreeVariable free) {
  BivariatePair out;
  out.free = free;
  for (int j = 0; j < 3; ++j) out.p5_t[j] = q5.coeff(1, j);
  for (int j = 0; j < 5; ++j) out.p5_0[j] = q5.coeff(0, j);
  out.p6_tt = p6.coeff(2, 0);
  for (int j = 0; j < 3; ++j) out.p6_t[j] = p6.coeff(1, j);
  for (int j = 0; j < 5; ++j) out.p6_0[j] = p6.coeff(0, j);

  auto in_support = [](int i, int j, int tt_max) {
    return (i == 0 && j <= 4) || (i == 1 && j <= 2) || (i == 2 && j <= tt_max);
  };
  auto off_ratio = [&](const BiPoly& p, int tt_max) {
    double kept = 0.0, off = 0.0;
    for (int i = 0; i <= p.deg_t(); ++i)
      for (int j = 0; j <= p.deg_rho(); ++j) {
        double& slot = in_support(i, j, tt_max) ? kept : off;
        slot = std::max(slot, std::abs(p.coeff(i, j)));
      }
    return kept > 0.0 ? off / kept : off;
  };
  out.off_support = std::max(off_ratio(q5, -1), off_ratio(p6, 0));
  return out;
}

}  // namespace

BivariatePair build_bivariate(const ODInput& input, const GeometrySet& geom,
                              const EliminationCoeffs& coeffs) {
  // On the c1 = c2 manifold the generators collapse to
  //   q5 = (c2.e_rho2) [r2.(v1 - v2)] - (r1.D2) mu/|r1|
  //   q6 = (c2.e_rho2) [r1.(v1 - v2)] - (r1.D2) z2,   z2 = |v2|^2/2 - E1
  // whose products never create the cubic terms that cancel in the raw form.
  const ManifoldPolys m = manifold_polys(input, coeffs);
  const Vec3 r1 = assemble_states(input).r1;
  const double r1_d2 = dot(r1, geom.D2);
  const BiPoly c2_e2 = dot(m.v2, geom.D2) * -1.0;  // (r2 x v2).e2 = -v2.(q2 x e2)
  const VecBiPoly dv = m.v1 - m.v2;
  const BiPoly z2 = dot(m.v2, m.v2) * 0.5 - dot(m.v1, m.v1) * 0.5 + BiPoly::constant(m.mu_r1);

  const BiPoly q5 = c2_e2 * dot(dv, m.r2) - BiPoly::constant(r1_d2 * m.mu_r1);
  const BiPoly p6 = c2_e2 * dot(dv, r1) - z2 * r1_d2;
  return extract(q5, p6, coeffs.free);
}

BivariatePair build_bivariate_direct(const ODInput& input, const GeometrySet& geom,
                                     const EliminationCoeffs& coeffs) {
  const ManifoldPolys m = manifold_polys(input, coeffs);
  const BiPoly v1sq = dot(m.v1, m.v1);
  const BiPoly v2sq = dot(m.v2, m.v2);
  const BiPoly energy1 = v1sq * 0.5 - BiPoly::constant(m.mu_r1);
  // q7 = 0  =>  z2 = |v2|^2 / 2 - E1
  const BiPoly z2 = v2sq * 0.5 - energy1;

  const VecBiPoly mu_l1 = times(v1sq - BiPoly::constant(m.mu_r1), m.r1) - times(dot(m.v1, m.r1), m.v1);
  const VecBiPoly mu_l2 = times(v2sq - z2, m.r2) - times(dot(m.v2, m.r2), m.v2);
  const VecBiPoly dl = mu_l1 - mu_l2;
  return extract(dot(dl, geom.D2), dot(dl, m.r1_cross_e2), coeffs.free);
}

int ResultantPoly::degree(double rel_tol) const {
  const double m = max_abs();
  for (int k = 8; k >= 0; --k)
    if (std::abs(v[k]) > rel_tol * m) return k;
  return -1;
}

double ResultantPoly::max_abs() const {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double ResultantPoly::eval(double rho2) const { return poly1::eval(v, rho2); }

ResultantPoly resultant(const BivariatePair& pair) {
  const auto a1 = pair.a1(), a0 = pair.a0(), b1 = pair.b1(), b0 = pair.b0();
  const auto t1 = poly1::mul(poly1::mul(a1, a0), b1);
  const auto t2 = poly1::scale(poly1::mul(a0, a0), pair.p6_tt);
  const auto t3 = poly1::mul(b0, poly1::mul(a1, a1));
  const auto v = poly1::sub(poly1::sub(t1, t2), t3);
  ResultantPoly out;
  for (std::size_t k = 0; k < v.size() && k < 9; ++k) out.v[k] = v[k];
  out.a1 = a1;
  out.a0 = a0;
  out.b1 = b1;
  out.b0 = b0;
  out.p20 = pair.p6_tt;
  return out;
}

namespace {

std::complex<double> horner_d(const std::vector<double>& c, std::complex<double> z,
                              std::complex<double>& d) {
  std::complex<double> p = 0.0;
  d = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) {
    d = d * z + p;
    p = p * z + c[k];
  }
  return p;
}

}  // namespace

std::complex<double> ResultantPoly::eval_grouped(std::complex<double> z, std::complex<double>* derivative,
                                                 double* scale) const {
  std::complex<double> da1, da0, db1, db0;
  const auto x1 = horner_d(a1, z, da1), x0 = horner_d(a0, z, da0);
  const auto y1 = horner_d(b1, z, db1), y0 = horner_d(b0, z, db0);
  const auto t1 = x1 * x0 * y1, t2 = x0 * x0 * p20, t3 = y0 * x1 * x1;
  if (derivative) {
    *derivative = da1 * x0 * y1 + x1 * da0 * y1 + x1 * x0 * db1 - 2.0 * x0 * da0 * p20 -
                  db0 * x1 * x1 - 2.0 * y0 * x1 * da1;
  }
  if (scale) *scale = std::abs(t1) + std::abs(t2) + std::abs(t3);
  return t1 - t2 - t3;
}

StatePair states_from_unknowns(const ODInput& input, const Unknowns& u) {
  const AssembledStates s = assemble_states(input);
  StatePair p;
  p.r1 = s.r1;
  p.v1 = input.obs1.qdot + u.rhodot1 * s.basis1.rho + u.xi1 * s.basis1.alpha + u.zeta1 * s.basis1.delta;
  p.r2 = input.obs2.q + u.rho2 * s.basis2.rho;
  p.v2 = input.obs2.qdot + u.rhodot2 * s.basis2.rho + u.rho2 * s.e_perp2;
  return p;
}

std::array<double, 7> generators(const ODInput& input, const GeometrySet& geom, const Unknowns& u) {
  const StatePair p = states_from_unknowns(input, u);
  const AssembledStates s = assemble_states(input);
  const double mu = input.mu;
  const Vec3 dc = cross(p.r1, p.v1) - cross(p.r2, p.v2);
  const Vec3 mu_l1 = (norm2(p.v1) - mu / norm(p.r1)) * p.r1 - dot(p.v1, p.r1) * p.v1;
  const Vec3 mu_l2 = (norm2(p.v2) - u.z2) * p.r2 - dot(p.v2, p.r2) * p.v2;
  const Vec3 dl = mu_l1 - mu_l2;
  const double e1 = 0.5 * norm2(p.v1) - mu / norm(p.r1);
  const double e2 = 0.5 * norm2(p.v2) - u.z2;
  return {dot(dc, geom.W12),
          dot(dc, cross(geom.D1, geom.W12)),
          dot(dc, cross(geom.D2, geom.W12)),
          dot(dl, geom.D1),
          dot(dl, geom.D2),
          dot(dl, cross(s.r1, s.basis2.rho)),
          e1 - e2};
}

ClosedForms closed_forms(const ODInput& input, const GeometrySet& geom, const Unknowns& u) {
  const StatePair p = states_from_unknowns(input, u);
  const AssembledStates s = assemble_states(input);
  const Vec3 c1 = cross(p.r1, p.v1);
  const Vec3 c2 = cross(p.r2, p.v2);
  const Vec3 dv = p.v1 - p.v2;

  ClosedForms f;
  f.r2_dot_D1 = dot(p.r2, geom.D1);
  f.r1_dot_D2 = dot(p.r1, geom.D2);
  const double t4a = dot(c1, s.basis1.rho) * dot(p.r1, dv);
  const double t4b = f.r2_dot_D1 * u.z2;
  const double t6a = dot(c2, s.basis2.rho) * dot(p.r1, dv);
  const double t6b = -f.r1_dot_D2 * u.z2;
  f.q4 = t4a + t4b;
  f.q5 = dot(c2, s.basis2.rho) * dot(p.r2, dv) - f.r1_dot_D2 * input.mu / norm(p.r1);
  f.q6 = t6a + t6b;
  f.scale = std::abs(f.r1_dot_D2) * (std::abs(t4a) + std::abs(t4b)) +
            std::abs(f.r2_dot_D1) * (std::abs(t6a) + std::abs(t6b));
  return f;
}

Unknowns unknowns_on_manifold(const ODInput& input, const EliminationCoeffs& coeffs, double t,
                              double rho2) {
  const LinearSolution lin = eliminate_free(coeffs, t, rho2);
  Unknowns u{.rhodot1 = lin.rhodot1, .xi1 = lin.xi1, .zeta1 = lin.zeta1, .rho2 = rho2,
             .rhodot2 = lin.rhodot2, .z2 = 0.0};
  const StatePair p = states_from_unknowns(input, u);
  const double e1 = 0.5 * norm2(p.v1) - input.mu / norm(p.r1);
  u.z2 = 0.5 * norm2(p.v2) - e1;
  return u;
}

double redundancy_check(const ODInput& input, const GeometrySet& geom, int samples, unsigned seed) {
  const Vec3 r1 = assemble_states(input).r1;
  if (!(std::abs(dot(r1, geom.D2)) > 1e-12 * norm(r1) * norm(geom.D2))) {
    throw OdError(ErrorKind::DegenerateGeometry, "r1.D2 vanishes; q4 is not generated by q1,q2,q3,q6");
  }
  const EliminationCoeffs coeffs = build_elimination(input, geom);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double vscale = std::max(norm(input.obs1.qdot), std::sqrt(input.mu / norm(r1)));
  const double rscale = std::max(norm(input.obs2.q), norm(r1));

  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double t = vscale * unit(rng);
    const double rho2 = rscale * (0.05 + 1.5 * (unit(rng) + 1.0));
    const Unknowns u = unknowns_on_manifold(input, coeffs, t, rho2);
    const ClosedForms f = closed_forms(input, geom, u);
    const double residual = std::abs(f.q4 * f.r1_dot_D2 + f.q6 * f.r2_dot_D1);
    worst = std::max(worst, f.scale > 0 ? residual / f.scale : residual);
  }
  return worst;
}

CoefficientSet build_coefficients(const ODInput& input) {
  CoefficientSet cs;
  cs.geom = build_geometry(input);
  cs.elim = build_elimination(input, cs.geom);
  require_nondegenerate(cs.elim);
  cs.pair = build_bivariate(input, cs.geom, cs.elim);
  cs.v = resultant(cs.pair);
  return cs;
}

}  // namespace kepod
