#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kepod/observations.hpp"
#include "kepod/solver.hpp"

namespace kepod {

struct CheckResult {
  std::string name;
  double value = 0.0;  // worst observed
  double tol = 0.0;
  bool pass = false;
  std::string detail;
};

struct CrossCheckConfig {
  double rho2_max = 10.0;  // au
  int scan_points = 10000;
  int identity_points = 20;
  int starts = 30;
  std::uint64_t seed = 1;
  int redundancy_samples = 100;
  bool jacobian = true;
  SolverConfig solver;
};

/// Production solver against the brute-force references on one input.
std::vector<CheckResult> cross_check(const ODInput& input, const CrossCheckConfig& config = {});

// The individual checks.  Each returns the worst normalized discrepancy.

/// Grouped resultant value vs -a1^2 g(rho2) by direct substitution.
double resultant_identity_error(const ODInput& input, const CoefficientSet& cs, int points,
                                double rho2_max);
/// |p6(-a0/a1, rho2)| over its term magnitudes, at real roots where the pivot holds.
double p6_consistency_error(const CoefficientSet& cs, const RootSet& roots, double pivot_eps);
/// Scan roots without a companion root within tol (1 + rho), and vice versa.
int scan_mismatches(const ODInput& input, const CoefficientSet& cs, const RootSet& roots,
                    double rho2_max, int points, double tol = 1e-7);
/// Largest distance, relative to max(1, rho2), from a multi-start solution to a root of v.
struct MultiStartSummary {
  int solutions = 0;
  double worst_distance = 0.0;
};
MultiStartSummary multi_start_distance(const ODInput& input, const RootSet& roots, int starts,
                                       std::uint64_t seed);
/// Worst row-relative gap between the analytic dS~/dD and the oracle's.
double ds_dd_error(const ODInput& input, const CandidateSolution& cand);

}  // namespace kepod
