#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "kepod/kepler.hpp"
#include "kepod/polysystem.hpp"
#include "kepod/rootfind.hpp"

namespace kepod {

struct SolverConfig {
  RootConfig roots;
  /// Max normalized residual of the 8-equation system for acceptance.
  double tol_accept = 1e-6;
  /// Element agreement across the two epochs: relative on a, absolute elsewhere.
  double tol_elem = 1e-6;
  /// |a1(rho2)| below this fraction of its term magnitudes is a singular pivot.
  double pivot_eps = 1e-10;
  /// Newton iterations on (q5, p6) after the univariate root.
  int polish_iterations = 20;
  /// Levenberg-Marquardt iterations on the full 8-residual system afterwards.
  int refine_iterations = 20;
  double cluster_rel = 0.05;  // roots closer than this * rho2 to another root form a cluster
};

struct CandidateFlags {
  bool real = true;  // false when the solution came from a complex root in a cluster
  bool rho2_pos = false;
  bool z2_pos = false;
  bool accepted = false;
};

struct CandidateSolution {
  Unknowns unknowns;
  /// Normalized residuals: c rows / (|c1|+|c2|), mu L rows / mu,
  /// energy / (|E1|+|E2~|), z2^2|r2|^2 - mu^2 over mu^2.
  std::array<double, 8> residuals{};
  double residual_full = 0.0;
  CandidateFlags flags;
  double t1_tilde = 0.0;
  double t2_tilde = 0.0;
  std::optional<KeplerianElements> elements1;
  std::optional<KeplerianElements> elements2;
  double element_gap = 0.0;
  std::string diagnostic;

  CartesianState state1(const ODInput& input) const;
  CartesianState state2(const ODInput& input) const;
};

std::array<double, 8> residuals_full(const ODInput& input, const Unknowns& u);

/// max(|a1-a2|/|a1|, |e1-e2|, and wrapped |i|, |Omega|, |omega| differences).
double element_gap(const KeplerianElements& a, const KeplerianElements& b);

struct SolveResult {
  CoefficientSet coefficients;
  RootSet roots;
  std::vector<CandidateSolution> candidates;  // ascending rho2
};

/// Resultant roots, back-substitution and filtering.  Throws DegenerateGeometry.
SolveResult solve_detailed(const ODInput& input, const SolverConfig& config = {});
std::vector<CandidateSolution> solve(const ODInput& input, const SolverConfig& config = {});

/// Fills residuals, flags, epochs and elements of a candidate from its unknowns.
void evaluate_candidate(const ODInput& input, const SolverConfig& config, CandidateSolution& cand);

}  // namespace kepod
