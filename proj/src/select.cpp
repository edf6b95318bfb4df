#include "kepod/select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "kepod/errors.hpp"

namespace kepod {

namespace {

Eigen::Vector3d ev(const Vec3& v) { return {v.x, v.y, v.z}; }

Eigen::Matrix3d em(const Mat3& m) {
  Eigen::Matrix3d out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out(i, j) = m(i, j);
  return out;
}

void set_row(Mat5x12& m, int row, int col, const Vec3& v) {
  m(row, col) = v.x;
  m(row, col + 1) = v.y;
  m(row, col + 2) = v.z;
}

constexpr std::array<int, 5> kSCols{2, 3, 5, 10, 11};
constexpr std::array<int, 7> kDCols{0, 1, 4, 6, 7, 8, 9};

Mat3e invert_covariance(const Mat3e& g, const char* what) {
  Eigen::JacobiSVD<Mat3e> svd(g);
  const auto s = svd.singularValues();
  if (!(s(0) > 0.0) || !(s(2) > 1e-15 * s(0)) || !g.allFinite())
    throw OdError(ErrorKind::SingularCovariance, std::string(what) + " is not invertible");
  return g.inverse();
}

}  // namespace

Metric metric_from_string(const std::string& name) {
  if (name == "paper") return Metric::Literal;
  if (name == "weighted") return Metric::Weighted;
  throw OdError(ErrorKind::ValidationError, "unknown metric '" + name + "' (paper|weighted)");
}

std::string to_string(Metric m) { return m == Metric::Literal ? "paper" : "weighted"; }

Spherical to_spherical(const Vec3& v) {
  const double rho = norm(v);
  return Spherical{std::atan2(v.y, v.x), std::asin(std::clamp(v.z / rho, -1.0, 1.0)), rho};
}

double position_distance(const TopocentricPosition& p1, const Spherical& s, Metric metric) {
  const double da = wrap_pi(s.alpha - p1.alpha);
  const double dd = s.delta - p1.delta;
  const double dr = s.rho - p1.rho;
  if (metric == Metric::Literal) return std::sqrt(da * da + dd * dd + dr * dr);
  const double wa = da * std::cos(p1.delta), wr = dr / p1.rho;
  return std::sqrt(wa * wa + dd * dd + wr * wr);
}

Spherical predicted_position(const ODInput& input, const CandidateSolution& cand) {
  const CartesianState s2 = cand.state2(input);
  const CartesianState s1 = propagate(s2, cand.t1_tilde - cand.t2_tilde);
  return to_spherical(s1.r - input.obs1.q);
}

SelectionReport select_no_cov(const ODInput& input, const std::vector<CandidateSolution>& cands,
                              Metric metric) {
  SelectionReport rep;
  rep.metric = metric;
  double best = std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t k = 0; k < cands.size(); ++k) {
    if (!cands[k].flags.accepted) continue;
    SelectionEntry e;
    e.index = k;
    e.accepted = true;
    try {
      e.rho_hat = predicted_position(input, cands[k]);
      e.distance = position_distance(input.p1, e.rho_hat, metric);
    } catch (const OdError& err) {
      e.distance = std::numeric_limits<double>::infinity();
      e.diagnostic = err.what();
    }
    if (!found || e.distance < best) {
      best = e.distance;
      rep.chosen_index = k;
      found = true;
    }
    rep.entries.push_back(e);
  }
  if (!found) throw OdError(ErrorKind::NoAcceptedSolutions, "no accepted candidate to select from");
  return rep;
}

Mat6 permutation_m() {
  Mat6 m = Mat6::Zero();
  m(0, 0) = 1;
  m(1, 1) = 1;
  m(2, 3) = 1;
  m(3, 4) = 1;
  m(4, 2) = 1;
  m(5, 5) = 1;
  return m;
}

Mat6 cartesian_from_attributable_jacobian(double alpha, double delta, double alphadot,
                                          double deltadot, double rho, double rhodot) {
  const LosBasis b = los_basis(alpha, delta);
  const double cd = std::cos(delta), sd = std::sin(delta);
  const Vec3 radial{std::cos(alpha), std::sin(alpha), 0.0};
  std::array<Vec3, 6> dr{}, dv{};
  dr[0] = rho * cd * b.alpha;
  dr[1] = rho * b.delta;
  dr[4] = b.rho;
  dv[0] = rhodot * cd * b.alpha - rho * alphadot * cd * radial - rho * deltadot * sd * b.alpha;
  dv[1] = rhodot * b.delta - rho * alphadot * sd * b.alpha - rho * deltadot * b.rho;
  dv[2] = rho * cd * b.alpha;
  dv[3] = rho * b.delta;
  dv[4] = alphadot * cd * b.alpha + deltadot * b.delta;
  dv[5] = b.rho;
  Mat6 j;
  for (int c = 0; c < 6; ++c)
    for (int i = 0; i < 3; ++i) {
      j(i, c) = dr[c][i];
      j(3 + i, c) = dv[c][i];
    }
  return j;
}

std::array<double, 5> psi(const Vec3& r1, const Vec3& v1, const Vec3& r2, const Vec3& v2,
                          const Vec3& q2, double mu) {
  const Vec3 dc = cross(r1, v1) - cross(r2, v2);
  const double ir1 = mu / norm(r1);
  const Vec3 mu_l1 = (norm2(v1) - ir1) * r1 - dot(v1, r1) * v1;
  const double e1 = 0.5 * norm2(v1) - ir1;
  const double phi4 = dot(mu_l1 + dot(v2, r2) * v2, cross(q2, r2));
  const Vec3 b = -dot(v1, r1) * v1 - (0.5 * norm2(v2) + e1) * r2 + dot(v2, r2) * v2;
  const double phi5 = dot(b, cross(r1, r2 - q2));
  return {dc.x, dc.y, dc.z, phi4, phi5};
}

PhiPartials phi_partials(const Vec3& r1, const Vec3& v1, const Vec3& r2, const Vec3& v2,
                         const Vec3& q2, double mu) {
  const double nr1 = norm(r1);
  const double ir1 = mu / nr1, ir1_3 = mu / (nr1 * nr1 * nr1);
  const Vec3 s = cross(q2, r2);
  const Vec3 w = cross(r1, r2 - q2);
  const double v1r1 = dot(v1, r1), v2r2 = dot(v2, r2);
  const Vec3 mu_l1 = (norm2(v1) - ir1) * r1 - v1r1 * v1;
  const double k = 0.5 * norm2(v2) + 0.5 * norm2(v1) - ir1;
  const Vec3 b = -v1r1 * v1 - k * r2 + v2r2 * v2;

  PhiPartials p;
  p.phi4_r1 = (norm2(v1) - ir1) * s - dot(v1, s) * v1 + ir1_3 * dot(r1, s) * r1;
  p.phi4_v1 = 2.0 * dot(r1, s) * v1 - dot(v1, s) * r1 - v1r1 * s;
  p.phi4_r2 = dot(v2, s) * v2 + cross(mu_l1 + v2r2 * v2, q2);
  p.phi4_v2 = dot(v2, s) * r2 + v2r2 * s;
  p.phi5_r1 = -dot(v1, w) * v1 - ir1_3 * dot(r2, w) * r1 + cross(r2 - q2, b);
  p.phi5_v1 = -dot(v1, w) * r1 - v1r1 * w - dot(r2, w) * v1;
  p.phi5_r2 = -k * w + dot(v2, w) * v2 + cross(b, r1);
  p.phi5_v2 = -dot(r2, w) * v2 + dot(v2, w) * r2 + v2r2 * w;
  return p;
}

Mat5x12 dpsi_dcar(const Vec3& r1, const Vec3& v1, const Vec3& r2, const Vec3& v2, const Vec3& q2,
                  double mu) {
  Mat5x12 m = Mat5x12::Zero();
  m.block<3, 3>(0, 0) = -em(hat(v1));
  m.block<3, 3>(0, 3) = em(hat(r1));
  m.block<3, 3>(0, 6) = em(hat(v2));
  m.block<3, 3>(0, 9) = -em(hat(r2));
  const PhiPartials p = phi_partials(r1, v1, r2, v2, q2, mu);
  set_row(m, 3, 0, p.phi4_r1);
  set_row(m, 3, 3, p.phi4_v1);
  set_row(m, 3, 6, p.phi4_r2);
  set_row(m, 3, 9, p.phi4_v2);
  set_row(m, 4, 0, p.phi5_r1);
  set_row(m, 4, 3, p.phi5_v1);
  set_row(m, 4, 6, p.phi5_r2);
  set_row(m, 4, 9, p.phi5_v2);
  return m;
}

Eigen::Matrix<double, 12, 1> attributable_elements(const ODInput& input, const Unknowns& u) {
  const double rho1 = input.p1.rho, d1 = input.p1.delta;
  Eigen::Matrix<double, 12, 1> e;
  e << input.p1.alpha, d1, u.xi1 / (rho1 * std::cos(d1)), u.zeta1 / rho1, rho1, u.rhodot1,
      input.a2.alpha, input.a2.delta, input.a2.alphadot, input.a2.deltadot, u.rho2, u.rhodot2;
  return e;
}

Eigen::Matrix<double, 5, 1> s_tilde(const ODInput& input, const Unknowns& u) {
  const auto e = attributable_elements(input, u);
  Eigen::Matrix<double, 5, 1> s;
  for (int k = 0; k < 5; ++k) s(k) = e(kSCols[k]);
  return s;
}

CovarianceBundle jacobian_chain(const ODInput& input, const CandidateSolution& cand) {
  if (!input.gamma_d) throw OdError(ErrorKind::ValidationError, "covariance chain needs gamma_d");
  CovarianceBundle b;
  b.gamma_d = *input.gamma_d;

  const auto att = attributable_elements(input, cand.unknowns);
  b.dcar_datt.block<6, 6>(0, 0) =
      cartesian_from_attributable_jacobian(att(0), att(1), att(2), att(3), att(4), att(5));
  b.dcar_datt.block<6, 6>(6, 6) =
      cartesian_from_attributable_jacobian(att(6), att(7), att(8), att(9), att(10), att(11));

  const StatePair sp = states_from_unknowns(input, cand.unknowns);
  b.dpsi_dcar = dpsi_dcar(sp.r1, sp.v1, sp.r2, sp.v2, input.obs2.q, input.mu);

  Eigen::Matrix<double, 12, 5> dt_ds;
  Eigen::Matrix<double, 12, 7> dt_dd;
  for (int k = 0; k < 5; ++k) dt_ds.col(k) = b.dcar_datt.col(kSCols[k]);
  for (int k = 0; k < 7; ++k) dt_dd.col(k) = b.dcar_datt.col(kDCols[k]);
  b.dphi_ds = b.dpsi_dcar * dt_ds;
  b.dphi_dd = b.dpsi_dcar * dt_dd;

  Eigen::JacobiSVD<Mat5> svd(b.dphi_ds);
  const auto sv = svd.singularValues();
  b.dphi_ds_condition = sv(4) > 0.0 ? sv(0) / sv(4) : std::numeric_limits<double>::infinity();
  if (!std::isfinite(b.dphi_ds_condition) || b.dphi_ds_condition > 1e15)
    throw OdError(ErrorKind::SingularJacobian, "dPhi/dS~ is singular");
  b.ds_dd = -b.dphi_ds.fullPivLu().solve(b.dphi_dd);

  const double rho1 = input.p1.rho;
  b.dv1t_dv1 = Mat3e::Identity();
  b.dv1t_dv1(0, 0) = 1.0 / (rho1 * std::cos(input.p1.delta));
  b.dv1t_dv1(1, 1) = 1.0 / rho1;

  Eigen::Matrix<double, 6, 7> stacked = Eigen::Matrix<double, 6, 7>::Zero();
  stacked.block<3, 3>(0, 0) = Mat3e::Identity();
  stacked.block<3, 7>(3, 0) = b.ds_dd.block<3, 7>(0, 0);
  b.datt1_dd = permutation_m() * stacked;

  b.datt2_dd.setZero();
  b.datt2_dd.block<4, 4>(0, 3) = Eigen::Matrix4d::Identity();
  b.datt2_dd.block<2, 7>(4, 0) = b.ds_dd.block<2, 7>(3, 0);

  const Mat6x7 dcar1 = b.dcar_datt.block<6, 6>(0, 0) * b.datt1_dd;
  const Mat6x7 dcar2 = b.dcar_datt.block<6, 6>(6, 6) * b.datt2_dd;
  b.gamma_car1 = dcar1 * b.gamma_d * dcar1.transpose();
  b.gamma_car2 = dcar2 * b.gamma_d * dcar2.transpose();
  b.gamma_car1 = 0.5 * (b.gamma_car1 + b.gamma_car1.transpose()).eval();
  b.gamma_car2 = 0.5 * (b.gamma_car2 + b.gamma_car2.transpose()).eval();
  return b;
}

Mat6 stm_fd(const CartesianState& s, double dt) {
  Mat6 phi;
  const double sr = norm(s.r), sv = norm(s.v);
  for (int k = 0; k < 6; ++k) {
    const double h = 1e-7 * (k < 3 ? sr : sv);
    CartesianState plus = s, minus = s;
    if (k < 3) {
      plus.r[k] += h;
      minus.r[k] -= h;
    } else {
      plus.v[k - 3] += h;
      minus.v[k - 3] -= h;
    }
    const CartesianState a = propagate(plus, dt), c = propagate(minus, dt);
    for (int i = 0; i < 3; ++i) {
      phi(i, k) = (a.r[i] - c.r[i]) / (2.0 * h);
      phi(3 + i, k) = (a.v[i] - c.v[i]) / (2.0 * h);
    }
  }
  return phi;
}

double chi3_kernel(const Eigen::Vector3d& diff, const Mat3e& gamma_p1p, const Mat3e& gamma_p1) {
  const Mat3e c = invert_covariance(gamma_p1p, "Gamma_P1p");
  const Mat3e c1 = invert_covariance(gamma_p1, "Gamma_P1");
  const Mat3e gamma0 = invert_covariance(c + c1, "C0");
  const Mat3e kernel = c - c * gamma0 * c;
  const double chi_sq = diff.dot(kernel * diff);
  const double scale = diff.squaredNorm() * kernel.cwiseAbs().maxCoeff();
  if (chi_sq < 0.0 && chi_sq >= -1e-10 * std::max(scale, 1.0)) return 0.0;
  return chi_sq;
}

Chi3Result chi3_penalty(const ODInput& input, const CandidateSolution& cand,
                        const CovarianceBundle& bundle) {
  const CartesianState s2 = cand.state2(input);
  const double dt = cand.t1_tilde - cand.t2_tilde;
  const CartesianState s1 = propagate(s2, dt);
  const Mat6 phi = stm_fd(s2, dt);
  const Mat6 gamma_back = phi * bundle.gamma_car2 * phi.transpose();

  Chi3Result out;
  const Vec3 topo = s1.r - input.obs1.q;
  out.predicted = to_spherical(topo);
  const LosBasis b = los_basis(out.predicted.alpha, out.predicted.delta);
  Eigen::Matrix3d j;
  j.row(0) = ev(b.alpha).transpose() / (out.predicted.rho * std::cos(out.predicted.delta));
  j.row(1) = ev(b.delta).transpose() / out.predicted.rho;
  j.row(2) = ev(b.rho).transpose();
  out.gamma_p1p = j * gamma_back.block<3, 3>(0, 0) * j.transpose();
  out.gamma_p1p = 0.5 * (out.gamma_p1p + out.gamma_p1p.transpose()).eval();

  const Eigen::Vector3d diff{wrap_pi(input.p1.alpha - out.predicted.alpha),
                             input.p1.delta - out.predicted.delta, input.p1.rho - out.predicted.rho};
  out.chi3_sq = chi3_kernel(diff, out.gamma_p1p, bundle.gamma_d.block<3, 3>(0, 0));
  out.chi3 = std::sqrt(std::max(out.chi3_sq, 0.0));
  return out;
}

SelectionReport select_with_cov(const ODInput& input, const std::vector<CandidateSolution>& cands,
                                double threshold, Metric metric) {
  SelectionReport rep = select_no_cov(input, cands, metric);
  rep.chi3_threshold = threshold;
  double best = std::numeric_limits<double>::infinity();
  for (SelectionEntry& e : rep.entries) {
    try {
      const CovarianceBundle bundle = jacobian_chain(input, cands[e.index]);
      const Chi3Result r = chi3_penalty(input, cands[e.index], bundle);
      e.chi3 = r.chi3;
      if (r.chi3 <= threshold) rep.kept.push_back(e.index);
      if (r.chi3 < best) {
        best = r.chi3;
        rep.chosen_index = e.index;
        rep.used_covariance = true;
      }
    } catch (const OdError& err) {
      e.diagnostic = err.what();
    }
  }
  return rep;
}

}  // namespace kepod
