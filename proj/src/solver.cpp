#include "kepod/solver.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kepod/errors.hpp"

namespace kepod {

namespace {

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : num; }

// Newton iterates on (q5, p6) in (t, rho2), starting point included.  Stops
// once a step leaves max_move of the start or stops changing rho.
std::vector<std::pair<double, double>> newton_pair(const BivariatePair& pair, int iterations,
                                                   double max_move, double t, double rho) {
  const auto a1 = pair.a1(), a0 = pair.a0(), b1 = pair.b1(), b0 = pair.b0();
  std::vector<std::pair<double, double>> path{{t, rho}};
  const double rho0 = rho;
  for (int it = 0; it < iterations; ++it) {
    const auto [a1v, a1d] = poly1::eval_d(a1, rho);
    const auto [a0v, a0d] = poly1::eval_d(a0, rho);
    const auto [b1v, b1d] = poly1::eval_d(b1, rho);
    const auto [b0v, b0d] = poly1::eval_d(b0, rho);
    const double f5 = a1v * t + a0v;
    const double f6 = (pair.p6_tt * t + b1v) * t + b0v;
    const double j11 = a1v, j12 = a1d * t + a0d;
    const double j21 = 2.0 * pair.p6_tt * t + b1v, j22 = b1d * t + b0d;
    const double det = j11 * j22 - j12 * j21;
    if (det == 0.0 || !std::isfinite(det)) break;
    const double dt = (f5 * j22 - f6 * j12) / det;
    const double dr = (j11 * f6 - j21 * f5) / det;
    if (!std::isfinite(dt) || !std::isfinite(dr)) break;
    if (std::abs(rho - dr - rho0) > max_move) break;
    t -= dt;
    rho -= dr;
    path.emplace_back(t, rho);
    if (std::abs(dr) <= 1e-16 * std::abs(rho) && std::abs(dt) <= 1e-16 * (std::abs(t) + 1e-300)) break;
  }
  return path;
}

double max_abs(const std::array<double, 8>& r) {
  double m = 0.0;
  for (double x : r) m = std::isfinite(x) ? std::max(m, std::abs(x)) : std::numeric_limits<double>::infinity();
  return m;
}

std::array<double, 6> pack(const Unknowns& u) {
  return {u.rhodot1, u.xi1, u.zeta1, u.rho2, u.rhodot2, u.z2};
}

Unknowns unpack(const std::array<double, 6>& x) {
  return Unknowns{x[0], x[1], x[2], x[3], x[4], x[5]};
}

// Levenberg-Marquardt on all eight residuals over the six unknowns, central
// difference Jacobian.  Steps that carry rho2 beyond max_move of its seed are
// refused like steps that do not lower the residual.
Unknowns refine_full(const ODInput& input, const Unknowns& start, int iterations, double rho_seed,
                     double max_move) {
  using Vec8 = Eigen::Matrix<double, 8, 1>;
  using Vec6 = Eigen::Matrix<double, 6, 1>;
  auto eval = [&](const std::array<double, 6>& x) {
    const auto r = residuals_full(input, unpack(x));
    return Vec8(Eigen::Map<const Vec8>(r.data()));
  };
  std::array<double, 6> x = pack(start);
  const StatePair sp = states_from_unknowns(input, start);
  const double vs = std::max(norm(sp.v1), norm(sp.v2));
  const std::array<double, 6> scale{vs, vs, vs, norm(sp.r2), vs, input.mu / norm(sp.r2)};
  Vec8 f = eval(x);
  double cost = f.squaredNorm();
  double lambda = 1e-6;
  for (int it = 0; it < iterations && std::isfinite(cost) && cost > 0.0; ++it) {
    Eigen::Matrix<double, 8, 6> jac;
    for (int k = 0; k < 6; ++k) {
      const double h = 1e-6 * std::max(std::abs(x[k]), scale[k]);
      auto xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      jac.col(k) = (eval(xp) - eval(xm)) / (2.0 * h);
    }
    if (!jac.allFinite()) break;
    const Eigen::Matrix<double, 6, 6> jtj = jac.transpose() * jac;
    const Vec6 g = jac.transpose() * f;
    bool improved = false;
    for (int tries = 0; tries < 12 && !improved; ++tries) {
      Eigen::Matrix<double, 6, 6> a = jtj;
      a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-300);
      const Vec6 dx = a.ldlt().solve(-g);
      auto xn = x;
      for (int k = 0; k < 6; ++k) xn[k] += dx[k];
      const Vec8 fn = eval(xn);
      const double cn = fn.squaredNorm();
      if (dx.allFinite() && std::abs(xn[3] - rho_seed) <= max_move && cn < cost) {
        x = xn;
        f = fn;
        cost = cn;
        lambda = std::max(lambda * 0.1, 1e-12);
        improved = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) break;
  }
  return unpack(x);
}

}  // namespace

CartesianState CandidateSolution::state1(const ODInput& input) const {
  const StatePair p = states_from_unknowns(input, unknowns);
  return CartesianState{p.r1, p.v1, t1_tilde, input.mu};
}

CartesianState CandidateSolution::state2(const ODInput& input) const {
  const StatePair p = states_from_unknowns(input, unknowns);
  return CartesianState{p.r2, p.v2, t2_tilde, input.mu};
}

std::array<double, 8> residuals_full(const ODInput& input, const Unknowns& u) {
  const StatePair p = states_from_unknowns(input, u);
  const double mu = input.mu;
  const Vec3 c1 = cross(p.r1, p.v1), c2 = cross(p.r2, p.v2);
  const Vec3 mu_l1 = (norm2(p.v1) - mu / norm(p.r1)) * p.r1 - dot(p.v1, p.r1) * p.v1;
  const Vec3 mu_l2 = (norm2(p.v2) - u.z2) * p.r2 - dot(p.v2, p.r2) * p.v2;
  const double e1 = 0.5 * norm2(p.v1) - mu / norm(p.r1);
  const double e2 = 0.5 * norm2(p.v2) - u.z2;

  const Vec3 dc = c1 - c2;
  const Vec3 dl = (mu_l1 - mu_l2) / mu;
  const double cs = norm(c1) + norm(c2);
  return {safe_ratio(dc.x, cs),
          safe_ratio(dc.y, cs),
          safe_ratio(dc.z, cs),
          dl.x,
          dl.y,
          dl.z,
          safe_ratio(e1 - e2, std::abs(e1) + std::abs(e2)),
          (u.z2 * u.z2 * norm2(p.r2) - mu * mu) / (mu * mu)};
}

double element_gap(const KeplerianElements& a, const KeplerianElements& b) {
  double gap = std::abs(a.a - b.a) / std::abs(a.a);
  gap = std::max(gap, std::abs(a.e - b.e));
  gap = std::max(gap, std::abs(wrap_pi(a.i - b.i)));
  gap = std::max(gap, std::abs(wrap_pi(a.Omega - b.Omega)));
  gap = std::max(gap, std::abs(wrap_pi(a.omega - b.omega)));
  return gap;
}

void evaluate_candidate(const ODInput& input, const SolverConfig& config, CandidateSolution& cand) {
  const Unknowns& u = cand.unknowns;
  cand.residuals = residuals_full(input, u);
  cand.residual_full = 0.0;
  bool finite = true;
  for (double r : cand.residuals) {
    finite = finite && std::isfinite(r);
    cand.residual_full = std::max(cand.residual_full, std::abs(r));
  }
  if (!finite) cand.residual_full = std::numeric_limits<double>::infinity();

  cand.flags.rho2_pos = u.rho2 > 0.0;
  cand.flags.z2_pos = u.z2 > 0.0;
  const auto epochs = light_corrected_epochs(input, u.rho2);
  cand.t1_tilde = epochs.t1;
  cand.t2_tilde = epochs.t2;

  cand.elements1.reset();
  cand.elements2.reset();
  cand.element_gap = std::numeric_limits<double>::infinity();
  if (finite) {
    try {
      cand.elements1 = elements_from_cartesian(cand.state1(input));
      cand.elements2 = elements_from_cartesian(cand.state2(input));
      cand.element_gap = element_gap(*cand.elements1, *cand.elements2);
    } catch (const OdError& e) {
      if (cand.diagnostic.empty()) cand.diagnostic = e.what();
    }
  }
  cand.flags.accepted = cand.flags.rho2_pos && cand.flags.z2_pos && cand.diagnostic.empty() &&
                        cand.residual_full <= config.tol_accept &&
                        cand.element_gap <= config.tol_elem;
}

namespace {

double pivot_scale(const std::vector<double>& a1, double rho) {
  double scale = 0.0, rk = 1.0;
  for (double c : a1) {
    scale += std::abs(c) * rk;
    rk *= std::abs(rho);
  }
  return scale;
}

// Distance from z to the closest other root of the resultant.
double nearest_other_root(const RootSet& roots, std::complex<double> z, double tol) {
  double nearest = std::numeric_limits<double>::infinity();
  for (const Root& other : roots.roots) {
    const double d = std::abs(other.value - z);
    if (d > tol * std::max(1.0, std::abs(z))) nearest = std::min(nearest, d);
  }
  return nearest;
}

// Pair-Newton from (t, rho), then the full system from both the start and
// the best pair iterate; the lower full residual wins.
Unknowns solve_from(const ODInput& input, const SolverConfig& config, const CoefficientSet& cs,
                    double t, double rho, double max_move) {
  const auto path = newton_pair(cs.pair, config.polish_iterations, max_move, t, rho);
  const Unknowns start = unknowns_on_manifold(input, cs.elim, t, rho);
  Unknowns polished = start;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& [tt, rr] : path) {
    const Unknowns u = unknowns_on_manifold(input, cs.elim, tt, rr);
    const double r = max_abs(residuals_full(input, u));
    if (r < best || !std::isfinite(best)) {
      best = r;
      polished = u;
    }
  }
  const Unknowns from_root = refine_full(input, start, config.refine_iterations, rho, max_move);
  const Unknowns from_pair = refine_full(input, polished, config.refine_iterations, rho, max_move);
  return max_abs(residuals_full(input, from_root)) < max_abs(residuals_full(input, from_pair))
             ? from_root
             : from_pair;
}

// Real t with p6(t, rho) = 0.
std::vector<double> p6_roots(const BivariatePair& pair, double rho) {
  const double a = pair.p6_tt, b = poly1::eval(pair.b1(), rho), c = poly1::eval(pair.b0(), rho);
  std::vector<double> ts;
  if (a == 0.0) {
    if (b != 0.0) ts.push_back(-c / b);
    return ts;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) {
    ts.push_back(-b / (2.0 * a));
    return ts;
  }
  const double qq = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  ts.push_back(qq / a);
  if (qq != 0.0) ts.push_back(c / qq);
  return ts;
}

CandidateSolution candidate_from_seed(const ODInput& input, const SolverConfig& config,
                                      const CoefficientSet& cs, double rho, double max_move) {
  CandidateSolution cand;
  const auto a1 = cs.pair.a1();
  const double a1v = poly1::eval(a1, rho);
  const bool pivot_ok = std::abs(a1v) > config.pivot_eps * pivot_scale(a1, rho);
  if (pivot_ok) {
    cand.unknowns = solve_from(input, config, cs, -poly1::eval(cs.pair.a0(), rho) / a1v, rho, max_move);
    evaluate_candidate(input, config, cand);
    if (cand.flags.accepted) return cand;
  }
  // Near a zero of a1 the ratio -a0/a1 says little about t; p6 fixes it
  // instead.
  bool have = pivot_ok;
  for (double t : p6_roots(cs.pair, rho)) {
    CandidateSolution alt;
    alt.unknowns = solve_from(input, config, cs, t, rho, max_move);
    evaluate_candidate(input, config, alt);
    if (alt.flags.accepted) return alt;
    if (!pivot_ok && (!have || alt.residual_full < cand.residual_full)) cand = alt;
    have = true;
  }
  if (!pivot_ok) {
    cand.unknowns.rho2 = have ? cand.unknowns.rho2 : rho;
    cand.diagnostic = "NearSingularPivot: a1(rho2) vanishes, q5 does not fix the free variable";
    evaluate_candidate(input, config, cand);
    cand.flags.accepted = false;
  }
  return cand;
}

}  // namespace

SolveResult solve_detailed(const ODInput& input, const SolverConfig& config) {
  SolveResult out;
  out.coefficients = build_coefficients(input);
  out.roots = all_roots(out.coefficients.v, config.roots);
  const CoefficientSet& cs = out.coefficients;
  const double tol_dup = config.roots.tol_dup;

  std::vector<CandidateSolution> raw;
  for (double root : filter_real_positive(out.roots, config.roots)) {
    const double nearest = nearest_other_root(out.roots, root, tol_dup);
    raw.push_back(candidate_from_seed(input, config, cs, root, std::min(nearest, 1e-2 * root)));
  }

  // Inside a tight root cluster the resultant only fixes its roots to the
  // rounding floor, and a real root can even turn into a complex pair.
  // Seeds spread over the cluster go to the full system; only accepted
  // solutions are kept from them.
  for (const Root& r : out.roots.roots) {
    const double re = r.value.real(), im = std::abs(r.value.imag());
    if (!(re > 0.0) || r.value.imag() < 0.0) continue;
    const double spread = std::max(im, nearest_other_root(out.roots, r.value, tol_dup));
    if (spread > config.cluster_rel * re) continue;
    const bool real = im <= config.roots.tol_im * (1.0 + re);
    for (int k = -4; k <= 4; ++k) {
      CandidateSolution cand =
          candidate_from_seed(input, config, cs, re + 0.25 * k * spread, std::min(spread, 1e-2 * re));
      if (!cand.flags.accepted) continue;
      cand.flags.real = real;
      raw.push_back(cand);
    }
  }

  // Several seeds may land on one solution: keep the best of each group,
  // accepted before rejected, then the lower residual.
  std::stable_sort(raw.begin(), raw.end(), [](const CandidateSolution& a, const CandidateSolution& b) {
    if (a.flags.accepted != b.flags.accepted) return a.flags.accepted;
    if (a.flags.real != b.flags.real) return a.flags.real;
    return a.residual_full < b.residual_full;
  });
  for (CandidateSolution& cand : raw) {
    bool fresh = true;
    for (const CandidateSolution& c : out.candidates)
      fresh = fresh && !(std::abs(c.unknowns.rho2 - cand.unknowns.rho2) <= 1e-8 * std::abs(cand.unknowns.rho2));
    if (fresh) out.candidates.push_back(std::move(cand));
  }
  std::stable_sort(out.candidates.begin(), out.candidates.end(),
                   [](const CandidateSolution& a, const CandidateSolution& b) {
                     return a.unknowns.rho2 < b.unknowns.rho2;
                   });
  return out;
}

std::vector<CandidateSolution> solve(const ODInput& input, const SolverConfig& config) {
  return solve_detailed(input, config).candidates;
}

}  // namespace kepod
