#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "kepod/polysystem.hpp"

namespace kepod {

struct RootConfig {
  double trim_rel = 1e-13;  // leading coefficients below this * max|coeff| are dropped
  double tol_im = 1e-7;     // |Im z| <= tol_im (1 + |Re z|) counts as real
  double tol_dup = 1e-9;    // real roots closer than tol_dup (1 + |x|) are merged
  int polish_steps = 2;       // Newton steps on the power-basis coefficients
  int aberth_iterations = 50;  // simultaneous sweeps when an evaluator is given
};

struct Root {
  std::complex<double> value;
  int multiplicity_hint = 1;
  /// |p(z)| / sum_k |c_k| |z|^k
  double residual = 0.0;
};

struct RootSet {
  std::vector<Root> roots;
  std::vector<double> real_roots;  // ascending
};

/// All complex roots of sum_k coeffs[k] x^k via the eigenvalues of the
/// balanced companion matrix, each polished by Newton steps on the original
/// polynomial.  Throws AllCoefficientsZero.
RootSet all_roots(std::span<const double> coeffs, const RootConfig& config = {});

/// Value at z of a polynomial equal to the coefficient form up to rounding;
/// fills the derivative and a magnitude scale for the residual.
using PolyEvaluator = std::function<std::complex<double>(std::complex<double> z,
                                                         std::complex<double>* derivative, double* scale)>;

/// Companion eigenvalues of coeffs, then Aberth-Ehrlich sweeps on `eval`
/// until the corrections stall.  Residuals are |eval| / scale.
RootSet all_roots(std::span<const double> coeffs, const PolyEvaluator& eval,
                  const RootConfig& config = {});

/// Polishes on the grouped form when the resultant carries it.
RootSet all_roots(const ResultantPoly& p, const RootConfig& config = {});

/// Real roots with positive real part, ascending and de-duplicated.
std::vector<double> filter_real_positive(const RootSet& rs, const RootConfig& config = {});

}  // namespace kepod
