#include "kepod/checks.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include "kepod/errors.hpp"
#include "kepod/oracle.hpp"
#include "kepod/select.hpp"

namespace kepod {

namespace {

oracle::LineParam line_param(const CoefficientSet& cs) {
  return cs.elim.free == FreeVariable::Zeta1 ? oracle::LineParam::Zeta1 : oracle::LineParam::Xi1;
}

double rel_lt(double scale) { return scale > 0.0 ? scale : 1.0; }

CheckResult make(std::string name, double value, double tol, std::string detail = {}) {
  return {std::move(name), value, tol, value <= tol, std::move(detail)};
}

}  // namespace

double resultant_identity_error(const ODInput& input, const CoefficientSet& cs, int points,
                                double rho2_max) {
  const auto param = line_param(cs);
  double worst = 0.0;
  for (int k = 0; k < points; ++k) {
    const double rho = rho2_max * std::pow(1e-2, 1.0 - double(k) / std::max(1, points - 1));
    const auto s = oracle::sample_line(input, rho, param);
    double scale = 0.0;
    const double v = cs.v.has_grouped() ? cs.v.eval_grouped(rho, nullptr, &scale).real()
                                        : cs.v.eval(rho);
    worst = std::max(worst, std::abs(v - s.h) / rel_lt(std::max(scale, s.scale)));
  }
  return worst;
}

double p6_consistency_error(const CoefficientSet& cs, const RootSet& roots, double pivot_eps) {
  const auto a1 = cs.pair.a1(), a0 = cs.pair.a0();
  double worst = 0.0;
  for (double rho : roots.real_roots) {
    const double x1 = poly1::eval(a1, rho), x0 = poly1::eval(a0, rho);
    double pivot_scale = 0.0, rk = 1.0;
    for (double c : a1) {
      pivot_scale += std::abs(c) * rk;
      rk *= std::abs(rho);
    }
    if (!(std::abs(x1) > pivot_eps * pivot_scale)) continue;
    const double t = -x0 / x1;
    const double b1 = poly1::eval(cs.pair.b1(), rho), b0 = poly1::eval(cs.pair.b0(), rho);
    const double terms = std::abs(cs.pair.p6_tt * t * t) + std::abs(b1 * t) + std::abs(b0);
    worst = std::max(worst, std::abs(cs.pair.p6(t, rho)) / rel_lt(terms));
  }
  return worst;
}

int scan_mismatches(const ODInput& input, const CoefficientSet& cs, const RootSet& roots,
                    double rho2_max, int points, double tol) {
  const auto scan = oracle::scan_roots(input, rho2_max, points, line_param(cs));
  const double lo = scan.grid.empty() ? 0.0 : scan.grid.front();
  std::vector<double> prod;
  for (double r : roots.real_roots) {
    if (r > lo && r <= rho2_max) prod.push_back(r);
  }
  const auto near = [tol](double x, const std::vector<double>& ys) {
    return std::any_of(ys.begin(), ys.end(),
                       [&](double y) { return std::abs(x - y) <= tol * std::max(1.0, x); });
  };
  int missing = 0;
  for (double x : scan.roots) missing += !near(x, prod);
  for (double x : prod) missing += !near(x, scan.roots);
  return missing;
}

MultiStartSummary multi_start_distance(const ODInput& input, const RootSet& roots, int starts,
                                       std::uint64_t seed) {
  MultiStartSummary out;
  for (const auto& m : oracle::multi_start(input, starts, seed)) {
    ++out.solutions;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : roots.roots) {
      best = std::min(best, std::abs(r.value - std::complex<double>(m.x[3], 0.0)));
    }
    out.worst_distance = std::max(out.worst_distance, best / std::max(1.0, m.x[3]));
  }
  return out;
}

double ds_dd_error(const ODInput& input, const CandidateSolution& cand) {
  ODInput in = input;
  if (!in.gamma_d) in.gamma_d = Cov7::Identity();
  const auto bundle = jacobian_chain(in, cand);
  const auto& u = cand.unknowns;
  const auto fd =
      oracle::implicit_jacobian_fd(in, {u.rhodot1, u.xi1, u.zeta1, u.rho2, u.rhodot2, u.z2});
  double worst = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double n = bundle.ds_dd.row(i).norm();
    worst = std::max(worst, (fd.row(i) - bundle.ds_dd.row(i)).norm() / rel_lt(n));
  }
  return worst;
}

std::vector<CheckResult> cross_check(const ODInput& input, const CrossCheckConfig& config) {
  std::vector<CheckResult> out;
  const auto res = solve_detailed(input, config.solver);
  const auto& cs = res.coefficients;

  out.push_back(make("resultant_degree", 8 - cs.v.degree(), 0.0,
                     "degree " + std::to_string(cs.v.degree())));
  out.push_back(make("resultant_substitution",
                     resultant_identity_error(input, cs, config.identity_points, config.rho2_max),
                     1e-9));
  out.push_back(make("p6_at_roots", p6_consistency_error(cs, res.roots, config.solver.pivot_eps),
                     1e-8));
  out.push_back(make("redundancy",
                     redundancy_check(input, cs.geom, config.redundancy_samples), 1e-9));

  const int miss = scan_mismatches(input, cs, res.roots, config.rho2_max, config.scan_points);
  out.push_back(make("scan_vs_companion", miss, 0.0, std::to_string(miss) + " unmatched"));

  const auto ms = multi_start_distance(input, res.roots, config.starts, config.seed);
  out.push_back(make("multistart_on_resultant", ms.worst_distance, 1e-7,
                     std::to_string(ms.solutions) + " solutions"));

  double worst_res = 0.0, worst_oracle = 0.0, worst_gap = 0.0, worst_jac = 0.0;
  int accepted = 0;
  for (const auto& c : res.candidates) {
    if (!c.flags.accepted) continue;
    ++accepted;
    worst_res = std::max(worst_res, c.residual_full);
    const auto& u = c.unknowns;
    const auto refined =
        oracle::newton_refine_system(input, {u.rhodot1, u.xi1, u.zeta1, u.rho2, u.rhodot2, u.z2});
    worst_oracle = std::max(worst_oracle, refined ? std::abs(refined->x[3] - u.rho2) /
                                                        std::max(1.0, u.rho2)
                                                  : std::numeric_limits<double>::infinity());
    worst_gap = std::max(worst_gap, c.element_gap);
    if (config.jacobian) worst_jac = std::max(worst_jac, ds_dd_error(input, c));
  }
  const auto n = std::to_string(accepted) + " accepted";
  out.push_back(make("accepted_residuals", worst_res, 1e-8, n));
  out.push_back(make("accepted_rho2_stable_under_refine", worst_oracle, 1e-8, n));
  out.push_back(make("element_equality", worst_gap, 1e-8, n));
  if (config.jacobian) out.push_back(make("ds_dd_vs_fd", worst_jac, 1e-6, n));
  return out;
}

}  // namespace kepod
