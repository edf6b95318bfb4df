#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "kepod/geom3.hpp"
#include "kepod/observations.hpp"

// Brute-force references for the production solver.  Nothing here touches the
// coefficient tables; states are rebuilt from the data and the generators are
// evaluated by direct substitution.

namespace kepod::oracle {

/// Which tangential velocity component parameterizes the c1 = c2 line.
enum class LineParam { Zeta1, Xi1 };

/// (rhodot1, xi1, zeta1, rho2, rhodot2, z2)
using Point6 = std::array<double, 6>;

struct States {
  Vec3 r1, v1, r2, v2;
};
States states(const ODInput& input, const Point6& x);

/// c1 - c2 (3), mu (L1 - L2~) (3), E1 - E2~, each divided by a fixed scale.
std::array<double, 7> reduced_residuals(const ODInput& input, const Point6& x);

/// A point of the c1 = c2 line at rho2, with z2 from E1 = E2~.
struct LinePoint {
  Point6 x;
  double q5 = 0.0;  // mu (L1 - L2~) . D2
  double q6 = 0.0;  // mu (L1 - L2~) . (r1 x e_rho2)
};
LinePoint line_point(const ODInput& input, double rho2, double t, LineParam param);

/// q5 = a1 t + a0 along the line at rho2.
struct LineSample {
  double a1 = 0.0;
  double a0 = 0.0;
  double g = 0.0;  // q6 at t = -a0/a1
  double h = 0.0;  // -a1^2 g, finite through the zeros of a1
  double scale = 0.0;  // sum of the magnitudes of the three products in h
};
LineSample sample_line(const ODInput& input, double rho2, LineParam param);

struct BracketScan {
  LineParam param = LineParam::Zeta1;
  std::vector<double> grid;  // log-spaced, ascending
  std::vector<double> g_values;
  std::vector<double> h_values;
  std::vector<std::pair<double, double>> brackets;  // sign changes of h
  std::vector<double> roots;                         // bisected
};

/// Samples h over n log-spaced points in [1e-4 rho2_max, rho2_max] and bisects
/// every sign change to 1e-10 au.  Around each sampled minimum of |h| without a
/// sign change the neighbourhood is resampled (32 points, 4 levels) to catch
/// root pairs closer than the grid.  A sample landing exactly on zero is a
/// root and is reported once.
BracketScan scan_roots(const ODInput& input, double rho2_max = 10.0, int n = 10000,
                       LineParam param = LineParam::Zeta1);

struct NewtonConfig {
  int max_iterations = 100;
  double tol = 1e-10;  // on max |reduced residual|
};

struct NewtonResult {
  Point6 x{};
  double residual = 0.0;
  int iterations = 0;
};

/// Damped least squares on the seven reduced residuals, central-difference
/// Jacobian.  Keeps iterating past tol while the residual still drops.
/// Returns nullopt when the residual never reaches tol.
std::optional<NewtonResult> newton_refine_system(const ODInput& input, const Point6& seed,
                                                 const NewtonConfig& config = {});

/// Converged solutions from `starts` random seeds, distinct in rho2 to 1e-8.
std::vector<NewtonResult> multi_start(const ODInput& input, int starts, std::uint64_t seed,
                                      const NewtonConfig& config = {});

/// (alphadot1, deltadot1, rhodot1, rho2, rhodot2) of a point.
Eigen::Matrix<double, 5, 1> s_tilde(const ODInput& input, const Point6& x);

/// d S~ / d D by following the solution through perturbed data: each of the
/// seven data components is stepped and the reduced system re-solved from x.
/// Five-point central differences over steps max_rel_step * scale / 3^k,
/// keeping the estimate closest to its neighbour.  Throws NoConvergence when
/// no step converges.
Eigen::Matrix<double, 5, 7> implicit_jacobian_fd(const ODInput& input, const Point6& x,
                                                 double max_rel_step = 1e-4);

}  // namespace kepod::oracle
