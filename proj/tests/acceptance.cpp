// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kepod/checks.hpp"
#include "kepod/errors.hpp"
#include "kepod/harness.hpp"
#include "kepod/kepler.hpp"
#include "kepod/polysystem.hpp"
#include "kepod/select.hpp"
#include "kepod/solver.hpp"

using namespace kepod;

namespace {

constexpr std::uint64_t kSeed = 1;
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<ODInput> generic_inputs(std::size_t n, std::uint64_t seed) {
  HarnessConfig h;
  std::vector<ODInput> out;
  for (std::uint64_t k = 0; k < n; ++k) out.push_back(generate_case(h, seed, k).input);
  return out;
}

Outcome exact_recovery() {
  BatchConfig cfg;
  cfg.n = 1000;
  cfg.seed = kSeed;
  cfg.retry = false;
  const auto t0 = std::chrono::steady_clock::now();
  const BatchResult r = run_batch(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::size_t good = 0, unflagged = 0;
  for (const CaseRecord& c : r.records) {
    if (c.status == CaseStatus::Solved && c.rho2_rel_err <= 1e-8)
      ++good;
    else if (!c.degeneracy_flag)
      ++unflagged;
  }
  const double frac = static_cast<double>(good) / cfg.n;
  return {frac >= 0.99 && unflagged == 0 && secs < 30.0,
          fmt("%zu/%llu within 1e-8, %zu unflagged failures, %.2f s", good,
              static_cast<unsigned long long>(cfg.n), unflagged, secs)};
}

Outcome resultant_degree() {
  const auto inputs = generic_inputs(200, kSeed + 1);
  const SolverConfig cfg;
  std::size_t full = 0;
  double worst = 0.0;
  for (const ODInput& in : inputs) {
    const SolveResult r = solve_detailed(in, cfg);
    full += r.coefficients.v.degree() == 8;
    worst = std::max(worst, p6_consistency_error(r.coefficients, r.roots, cfg.pivot_eps));
  }
  const double frac = static_cast<double>(full) / inputs.size();
  return {frac >= 0.95 && worst <= 1e-8,
          fmt("degree 8 in %zu/%zu, worst |p6(-a0/a1)| %.2e", full, inputs.size(), worst)};
}

Outcome lemma_identity() {
  std::mt19937_64 rng(kSeed + 2);
  std::uniform_real_distribution<double> u(-1.0, 1.0), mag(0.2, 6.0), speed(0.05, 1.6);
  double worst = 0.0;
  int n = 0;
  while (n < 10000) {
    Vec3 dir{u(rng), u(rng), u(rng)}, vdir{u(rng), u(rng), u(rng)};
    if (norm(dir) < 1e-3 || norm(vdir) < 1e-3) continue;
    CartesianState s;
    s.r = mag(rng) * unit(dir);
    // speeds from well bound to hyperbolic, in units of the local escape speed
    s.v = speed(rng) * std::sqrt(2 * s.mu / norm(s.r)) * unit(vdir);
    const KeplerIntegrals k = integrals(s);
    const double mu2 = s.mu * s.mu;
    const double lhs = mu2 * norm2(k.laplace) - 2 * k.energy * norm2(k.c) - mu2;
    const double scale = mu2 * norm2(k.laplace) + 2 * std::abs(k.energy) * norm2(k.c) + mu2;
    worst = std::max(worst, std::abs(lhs) / scale);
    ++n;
  }
  return {worst <= 1e-11, fmt("worst relative %.2e over %d states", worst, n)};
}

Outcome redundancy() {
  double worst = 0.0;
  const auto inputs = generic_inputs(50, kSeed + 3);
  for (const ODInput& in : inputs) worst = std::max(worst, redundancy_check(in, build_geometry(in), 100));
  return {worst <= 1e-9, fmt("worst normalized %.2e over %zu inputs x 100 points", worst, inputs.size())};
}

Outcome oracle_equivalence() {
  const auto inputs = generic_inputs(50, kSeed + 4);
  int mismatches = 0, solutions = 0;
  double worst = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const SolveResult r = solve_detailed(inputs[k]);
    mismatches += scan_mismatches(inputs[k], r.coefficients, r.roots, 10.0, 10000, 1e-7);
    const MultiStartSummary m = multi_start_distance(inputs[k], r.roots, 30, kSeed + k);
    solutions += m.solutions;
    worst = std::max(worst, m.worst_distance);
  }
  return {mismatches == 0 && worst <= 1e-7,
          fmt("%d scan/companion mismatches, %d multi-start solutions, worst distance %.2e", mismatches,
              solutions, worst)};
}

Outcome element_equality() {
  HarnessConfig h;
  h.kick_max = 5.0 * 0.017453292519943295;
  std::size_t count = 0;
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 200; ++k) {
    const HarnessConfig& cfg = h;
    for (const SyntheticCase& c : {generate_case(HarnessConfig{}, kSeed + 5, k), generate_case(cfg, kSeed + 5, k)}) {
      for (const CandidateSolution& cand : solve(c.input)) {
        if (!cand.flags.accepted) continue;
        ++count;
        worst = std::max(worst, cand.element_gap);
      }
    }
  }
  return {count > 0 && worst <= 1e-8, fmt("worst gap %.2e over %zu accepted candidates", worst, count)};
}

// Worst relative gap between the analytic partials of Phi4, Phi5 and central differences.
double partials_error(const StatePair& s, const Vec3& q2, double mu) {
  std::array<Vec3, 4> x{s.r1, s.v1, s.r2, s.v2};
  const PhiPartials p = phi_partials(x[0], x[1], x[2], x[3], q2, mu);
  const std::array<Vec3, 4> d4{p.phi4_r1, p.phi4_v1, p.phi4_r2, p.phi4_v2};
  const std::array<Vec3, 4> d5{p.phi5_r1, p.phi5_v1, p.phi5_r2, p.phi5_v2};
  double worst = 0.0;
  for (int b = 0; b < 4; ++b) {
    Vec3 fd4, fd5;
    for (int k = 0; k < 3; ++k) {
      const double h = 1e-5 * std::max(1e-2, norm(x[b]));
      auto xp = x, xm = x;
      xp[b][k] += h;
      xm[b][k] -= h;
      const auto fp = psi(xp[0], xp[1], xp[2], xp[3], q2, mu);
      const auto fm = psi(xm[0], xm[1], xm[2], xm[3], q2, mu);
      fd4[k] = (fp[3] - fm[3]) / (2 * h);
      fd5[k] = (fp[4] - fm[4]) / (2 * h);
    }
    worst = std::max(worst, norm(d4[b] - fd4) / std::max(norm(fd4), 1e-300));
    worst = std::max(worst, norm(d5[b] - fd5) / std::max(norm(fd5), 1e-300));
  }
  return worst;
}

Outcome jacobian_suite() {
  HarnessConfig h;
  h.sigma_angle = kArcsec;
  h.sigma_rate = 1e-5;
  h.sigma_rho = 1e-6;
  h.attach_covariance = true;
  int n = 0, failed = 0;
  double worst_partial = 0.0, worst_chain = 0.0;
  for (std::uint64_t k = 0; n < 100 && k < 1000; ++k) {
    const SyntheticCase c = generate_case(h, kSeed + 6, k);
    std::vector<CandidateSolution> cands;
    try {
      cands = solve(c.input);
    } catch (const OdError&) {
      continue;
    }
    for (const CandidateSolution& cand : cands) {
      if (!cand.flags.accepted || n >= 100) continue;
      ++n;
      const StatePair s = states_from_unknowns(c.input, cand.unknowns);
      worst_partial = std::max(worst_partial, partials_error(s, c.input.obs2.q, c.input.mu));
      try {
        worst_chain = std::max(worst_chain, ds_dd_error(c.input, cand));
      } catch (const OdError&) {
        ++failed;
        worst_chain = kInf;
      }
    }
  }
  return {n == 100 && worst_partial <= 1e-6 && worst_chain <= 1e-6,
          fmt("%d candidates, worst partial %.2e, worst dS/dD %.2e, %d reference failures", n,
              worst_partial, worst_chain, failed)};
}

Outcome kick_experiment() {
  BatchConfig cfg;
  cfg.n = 500;
  cfg.seed = kSeed + 7;
  cfg.harness.kick_max = 5.0 * 0.017453292519943295;
  const BatchResult r = run_batch(cfg);
  std::size_t good = 0, unflagged_failures = 0;
  for (const CaseRecord& c : r.records) {
    if (c.status == CaseStatus::Solved) {
      good += c.delta_traj <= 1e-6;
    } else if (!c.degeneracy_flag) {
      ++unflagged_failures;
    }
  }
  const std::size_t initially_unsolved = r.recovered_by_retry + r.failed;
  const bool retry_ok = 2 * r.recovered_by_retry >= initially_unsolved || unflagged_failures == 0;
  const double frac = r.solved ? static_cast<double>(good) / r.solved : 0.0;
  return {frac >= 0.99 && retry_ok,
          fmt("delta <= 1e-6 in %zu/%zu solved; retry recovered %zu of %zu, %zu unflagged failures", good,
              r.solved, r.recovered_by_retry, initially_unsolved, unflagged_failures)};
}

Outcome statistics_columns() {
  BatchConfig cfg;
  cfg.n = 200;
  cfg.seed = kSeed + 8;
  const BatchResult r = run_batch(cfg);
  std::ostringstream csv;
  write_records_csv(csv, r.records);
  const std::string header = csv.str().substr(0, csv.str().find('\n'));
  bool columns = r.summary.size() == kStatColumns.size();
  for (const std::string& col : kStatColumns) columns = columns && header.find(col) != std::string::npos;
  columns = columns && header.find(",q,") != std::string::npos && header.find("upsilon") != std::string::npos;
  bool qv = true;
  for (const CaseRecord& c : r.records)
    if (c.status == CaseStatus::Solved) qv = qv && std::isfinite(c.q) && std::isfinite(c.upsilon) && c.q >= 0.0;
  double worst = 0.0;
  for (const ColumnStats& s : r.summary) worst = std::max({worst, std::abs(s.mean), s.stddev});
  return {columns && qv && r.solved > 0 && worst < 1e-7,
          fmt("%zu solved, largest |mean|/std %.2e, q-upsilon %s", r.solved, worst, qv ? "emitted" : "missing")};
}

double best_chi3(const ODInput& in, double threshold) {
  try {
    const SelectionReport rep = select_with_cov(in, solve(in), threshold);
    double best = kInf;
    for (const SelectionEntry& e : rep.entries)
      if (e.chi3) best = std::min(best, *e.chi3);
    return best;
  } catch (const OdError&) {
    return kInf;
  }
}

Outcome chi3_discrimination() {
  constexpr double threshold = 5.0;
  HarnessConfig h;
  h.sigma_angle = kArcsec;
  h.sigma_rate = 1e-5;
  h.sigma_rho = 1e-6;
  h.attach_covariance = true;
  std::vector<double> matched, mismatched;
  for (std::uint64_t k = 0; k < 100; ++k) {
    matched.push_back(best_chi3(generate_case(h, kSeed + 9, k).input, threshold));
    mismatched.push_back(best_chi3(generate_mismatched_case(h, kSeed + 9, k).input, threshold));
  }
  const double m = median(matched), w = median(mismatched);
  return {m < threshold && threshold < w && w >= 10.0 * m,
          fmt("median matched %.3g, mismatched %.3g, threshold %.3g, separation %.3g", m, w, threshold, w / m)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"exact recovery", exact_recovery},
      {"resultant degree and consistency", resultant_degree},
      {"integral identity", lemma_identity},
      {"redundancy", redundancy},
      {"oracle equivalence", oracle_equivalence},
      {"element equality", element_equality},
      {"jacobian suite", jacobian_suite},
      {"kick experiment", kick_experiment},
      {"statistics columns", statistics_columns},
      {"chi3 discrimination", chi3_discrimination},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %2zu %-34s %s  %s\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
