#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "kepod/bipoly.hpp"
#include "kepod/geom3.hpp"
#include "kepod/observations.hpp"

namespace kepod {

/// Vectors that carry the dependence of c1, c2 on the unknowns:
///   c1 = D1 rhodot1 + N1 xi1 + O1 zeta1 + P1vec
///   c2 = D2 rhodot2 + E2 rho2^2 + F2 rho2 + G2
struct GeometrySet {
  Vec3 D1, D2, W12;
  Vec3 N1, O1, P1vec;
  Vec3 E2, F2, G2;
};

GeometrySet build_geometry(const ODInput& input);

/// One linear row: c100 xi1 + c010 zeta1 + c002 rho2^2 + c001 rho2 + c000.
struct QRow {
  double c100 = 0.0;
  double c010 = 0.0;
  double c002 = 0.0;
  double c001 = 0.0;
  double c000 = 0.0;

  double eval(double xi1, double zeta1, double rho2) const {
    return c100 * xi1 + c010 * zeta1 + (c002 * rho2 + c001) * rho2 + c000;
  }
};

/// Which tangential velocity component stays free after the linear elimination.
enum class FreeVariable { Zeta1, Xi1 };

struct EliminationCoeffs {
  QRow q1;  // (c1 - c2) . W12
  QRow q2;  // (c1 - c2) . D1 x W12, minus the rhodot2 term
  QRow q3;  // (c1 - c2) . D2 x W12, minus the rhodot1 term
  /// |W12|^2, the coefficient of rhodot1 in q3 and of rhodot2 in q2.
  double w2 = 0.0;
  double w_threshold = 0.0;  // 1e-12 |q1|^2 |q2|^2
  double q_threshold = 0.0;  // 1e-12 |r1| |q1| |q2|
  bool w12_small = false;
  bool pivot_small = false;
  /// Xi1 is eliminated unless |Q1_010| > |Q1_100|.
  FreeVariable free = FreeVariable::Zeta1;

  bool degenerate() const { return w12_small || pivot_small; }
  std::string degeneracy_reason() const;
};

/// Fills the coefficient tables and flags degeneracy; never throws.
EliminationCoeffs build_elimination(const ODInput& input, const GeometrySet& geom);

struct LinearSolution {
  double xi1 = 0.0;
  double zeta1 = 0.0;
  double rhodot1 = 0.0;
  double rhodot2 = 0.0;
};

/// Eliminates xi1 (pivot Q1_100), then rhodot1 and rhodot2, for given zeta1, rho2.
/// Throws DegenerateGeometry when the pivot or |W12|^2 is below threshold.
LinearSolution eliminate_linear(const EliminationCoeffs& coeffs, double zeta1, double rho2);
/// Mirror path: eliminates zeta1 (pivot Q1_010) for given xi1, rho2.
LinearSolution eliminate_linear_swapped(const EliminationCoeffs& coeffs, double xi1, double rho2);
/// Dispatches on coeffs.free: `t` is zeta1 or xi1.
LinearSolution eliminate_free(const EliminationCoeffs& coeffs, double t, double rho2);

/// xi1, zeta1, rhodot1, rhodot2 as polynomials in (t, rho2), t the free variable.
struct EliminatedForms {
  BiPoly xi1, zeta1, rhodot1, rhodot2;
};
EliminatedForms eliminated_forms(const EliminationCoeffs& coeffs);

/// q5 = a1(rho2) t + a0(rho2)
/// p6 = P20 t^2 + b1(rho2) t + b0(rho2)
/// with t the free variable (zeta1 unless the pivot was swapped).
struct BivariatePair {
  FreeVariable free = FreeVariable::Zeta1;
  std::array<double, 3> p5_t{};   // P5_10, P5_11, P5_12
  std::array<double, 5> p5_0{};   // P5_00 .. P5_04
  double p6_tt = 0.0;             // P6_20
  std::array<double, 3> p6_t{};   // P6_10, P6_11, P6_12
  std::array<double, 5> p6_0{};   // P6_00 .. P6_04
  /// Largest discarded coefficient outside the supports above, relative to
  /// the largest kept one.
  double off_support = 0.0;

  std::vector<double> a1() const { return {p5_t.begin(), p5_t.end()}; }
  std::vector<double> a0() const { return {p5_0.begin(), p5_0.end()}; }
  std::vector<double> b1() const { return {p6_t.begin(), p6_t.end()}; }
  std::vector<double> b0() const { return {p6_0.begin(), p6_0.end()}; }
  double q5(double t, double rho2) const;
  double p6(double t, double rho2) const;
};

/// Coefficients of q5 = mu (L1 - L2~) . D2 and q6 = mu (L1 - L2~) . (r1 x e_rho2)
/// with the linear unknowns and z2 (from q7 = 0) substituted, expanded from
/// the forms the generators take once c1 = c2.  Throws DegenerateGeometry on
/// degenerate coefficients.
BivariatePair build_bivariate(const ODInput& input, const GeometrySet& geom,
                              const EliminationCoeffs& coeffs);
/// Same polynomials expanded straight from the generator definitions.  The
/// cubic terms cancel only to rounding, so off_support measures that noise.
BivariatePair build_bivariate_direct(const ODInput& input, const GeometrySet& geom,
                                     const EliminationCoeffs& coeffs);

/// v(rho2) = a1 a0 b1 - a0^2 P20 - b0 a1^2 = -a1^2 p6(-a0/a1, rho2).
struct ResultantPoly {
  std::array<double, 9> v{};  // ascending powers of rho2

  /// The factors of the grouped form.  Expanding to powers of rho2 cancels
  /// several digits away from the origin; the grouped form does not.
  std::vector<double> a1, a0, b1, b0;
  double p20 = 0.0;

  /// Degree after dropping leading coefficients below rel_tol * max|v|.
  int degree(double rel_tol = 1e-13) const;
  double max_abs() const;
  double eval(double rho2) const;
  bool has_grouped() const { return !a1.empty() || !a0.empty(); }
  /// Grouped-form value at z; optionally its derivative and the sum of the
  /// magnitudes of the three products.
  std::complex<double> eval_grouped(std::complex<double> z, std::complex<double>* derivative = nullptr,
                                    double* scale = nullptr) const;
};

ResultantPoly resultant(const BivariatePair& pair);

/// Unknowns of the full system.
struct Unknowns {
  double rhodot1 = 0.0;
  double xi1 = 0.0;
  double zeta1 = 0.0;
  double rho2 = 0.0;
  double rhodot2 = 0.0;
  double z2 = 0.0;
};

/// Heliocentric states implied by the data and a set of unknowns.
struct StatePair {
  Vec3 r1, v1, r2, v2;
};
StatePair states_from_unknowns(const ODInput& input, const Unknowns& u);

/// The seven generators q1..q7 evaluated directly from their definitions.
std::array<double, 7> generators(const ODInput& input, const GeometrySet& geom, const Unknowns& u);

/// The closed forms that q4~, q5~, q6~ take once c1 = c2.
struct ClosedForms {
  double q4 = 0.0;
  double q5 = 0.0;
  double q6 = 0.0;
  double r2_dot_D1 = 0.0;
  double r1_dot_D2 = 0.0;
  /// Sum of magnitudes of the terms entering q4 (r1.D2) + q6 (r2.D1).
  double scale = 0.0;
};
ClosedForms closed_forms(const ODInput& input, const GeometrySet& geom, const Unknowns& u);

/// Unknowns on the c1 = c2 manifold for free variable t and rho2, with z2 from q7.
Unknowns unknowns_on_manifold(const ODInput& input, const EliminationCoeffs& coeffs, double t,
                              double rho2);

/// max |q4~ (r1.D2) + q6~ (r2.D1)| / scale over `samples` pseudo-random
/// (t, rho2) points.  Throws DegenerateGeometry when |r1.D2| is negligible.
double redundancy_check(const ODInput& input, const GeometrySet& geom, int samples = 100,
                        unsigned seed = 12345);

/// Everything the resultant construction produced, for dumps and diagnostics.
struct CoefficientSet {
  GeometrySet geom;
  EliminationCoeffs elim;
  BivariatePair pair;
  ResultantPoly v;
};
CoefficientSet build_coefficients(const ODInput& input);

}  // namespace kepod
