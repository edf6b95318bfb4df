#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kepod/solver.hpp"

namespace kepod {

using Mat3e = Eigen::Matrix3d;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using Mat5x7 = Eigen::Matrix<double, 5, 7>;
using Mat5x12 = Eigen::Matrix<double, 5, 12>;
using Mat6x7 = Eigen::Matrix<double, 6, 7>;

enum class Metric { Literal, Weighted };  // CLI names "paper" and "weighted"

Metric metric_from_string(const std::string& name);
std::string to_string(Metric m);

/// (alpha, delta, rho) of a topocentric vector; alpha in (-pi, pi].
struct Spherical {
  double alpha = 0.0;
  double delta = 0.0;
  double rho = 0.0;
};

Spherical to_spherical(const Vec3& v);

/// Distance between an observed and a predicted topocentric position.
///   Literal:  |(wrap(da), dd, drho)| with radians and au taken as raw numbers
///   Weighted: |(wrap(da) cos(delta1), dd, drho / rho1)|, all dimensionless
double position_distance(const TopocentricPosition& p1, const Spherical& s, Metric metric);

/// Candidate state at t2~ carried back to t1~, as seen from q(t1).
Spherical predicted_position(const ODInput& input, const CandidateSolution& cand);

struct SelectionEntry {
  std::size_t index = 0;  // into the candidate list
  bool accepted = false;
  Spherical rho_hat;
  double distance = 0.0;
  std::optional<double> chi3;
  std::string diagnostic;
};

struct SelectionReport {
  std::vector<SelectionEntry> entries;  // accepted candidates only
  std::size_t chosen_index = 0;         // candidate index of the chosen one
  Metric metric = Metric::Literal;
  bool used_covariance = false;
  std::optional<double> chi3_threshold;
  std::vector<std::size_t> kept;  // candidate indices with chi3 <= threshold
};

/// Minimum topocentric distance at t1~.  Throws NoAcceptedSolutions.
SelectionReport select_no_cov(const ODInput& input, const std::vector<CandidateSolution>& cands,
                              Metric metric = Metric::Literal);

/// Permutation taking (alpha, delta, rho, alphadot, deltadot, rhodot) to
/// attributable-element order (alpha, delta, alphadot, deltadot, rho, rhodot).
Mat6 permutation_m();

/// d(r, rdot) / d(alpha, delta, alphadot, deltadot, rho, rhodot); the observer
/// state is data-independent.
Mat6 cartesian_from_attributable_jacobian(double alpha, double delta, double alphadot,
                                          double deltadot, double rho, double rhodot);

/// Phi = (c1 - c2, Phi4, Phi5) as a function of both Cartesian states.
std::array<double, 5> psi(const Vec3& r1, const Vec3& v1, const Vec3& r2, const Vec3& v2,
                          const Vec3& q2, double mu);

struct PhiPartials {
  Vec3 phi4_r1, phi4_v1, phi4_r2, phi4_v2;
  Vec3 phi5_r1, phi5_v1, phi5_r2, phi5_v2;
};

PhiPartials phi_partials(const Vec3& r1, const Vec3& v1, const Vec3& r2, const Vec3& v2,
                         const Vec3& q2, double mu);

/// Rows (c1 - c2, Phi4, Phi5), columns (r1, rdot1, r2, rdot2).
Mat5x12 dpsi_dcar(const Vec3& r1, const Vec3& v1, const Vec3& r2, const Vec3& v2, const Vec3& q2,
                  double mu);

/// Attributable elements (alpha, delta, alphadot, deltadot, rho, rhodot) at
/// both epochs, concatenated.
Eigen::Matrix<double, 12, 1> attributable_elements(const ODInput& input, const Unknowns& u);

/// Unknown vector S~ = (alphadot1, deltadot1, rhodot1, rho2, rhodot2).
Eigen::Matrix<double, 5, 1> s_tilde(const ODInput& input, const Unknowns& u);

struct CovarianceBundle {
  Cov7 gamma_d = Cov7::Zero();
  Mat12 dcar_datt = Mat12::Zero();
  Mat5x12 dpsi_dcar = Mat5x12::Zero();
  Mat5 dphi_ds = Mat5::Zero();
  Mat5x7 dphi_dd = Mat5x7::Zero();
  Mat5x7 ds_dd = Mat5x7::Zero();
  double dphi_ds_condition = 0.0;
  Mat3e dv1t_dv1 = Mat3e::Zero();  // diag(1/(rho1 cos delta1), 1/rho1, 1)
  Mat6x7 datt1_dd = Mat6x7::Zero();
  Mat6x7 datt2_dd = Mat6x7::Zero();
  Mat6 gamma_car1 = Mat6::Zero();
  Mat6 gamma_car2 = Mat6::Zero();
};

/// Implicit-function-theorem chain from Gamma_D to both Cartesian covariances.
/// Throws ValidationError without gamma_d, SingularJacobian when dPhi/dS~ is
/// not invertible.
CovarianceBundle jacobian_chain(const ODInput& input, const CandidateSolution& cand);

/// Central-difference state transition matrix of propagate over dt.
Mat6 stm_fd(const CartesianState& s, double dt);

struct Chi3Result {
  double chi3_sq = 0.0;
  double chi3 = 0.0;
  Spherical predicted;
  Mat3e gamma_p1p = Mat3e::Zero();
};

/// (P1 - P1p) . [C - C Gamma0 C] (P1 - P1p), C = Gamma_P1p^-1,
/// Gamma0 = (C + Gamma_P1^-1)^-1.  Throws SingularCovariance.
double chi3_kernel(const Eigen::Vector3d& diff, const Mat3e& gamma_p1p, const Mat3e& gamma_p1);

/// Identification penalty of a candidate; the covariance of the state at
/// t2~ is carried to t1~ with the finite-difference STM.
Chi3Result chi3_penalty(const ODInput& input, const CandidateSolution& cand,
                        const CovarianceBundle& bundle);

/// Minimum chi3 among accepted candidates; kept lists those under threshold.
/// Throws NoAcceptedSolutions.
SelectionReport select_with_cov(const ODInput& input, const std::vector<CandidateSolution>& cands,
                                double threshold = 5.0, Metric metric = Metric::Literal);

}  // namespace kepod
