#include "kepod/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "kepod/errors.hpp"

namespace kepod::oracle {

namespace {

// Extended precision throughout, so the reference sits below the rounding
// floor of the production path.
using real = long double;

struct V3 {
  real x = 0, y = 0, z = 0;
};
V3 operator+(const V3& a, const V3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
V3 operator-(const V3& a, const V3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
V3 operator-(const V3& a) { return {-a.x, -a.y, -a.z}; }
V3 operator*(real s, const V3& a) { return {s * a.x, s * a.y, s * a.z}; }
real dot(const V3& a, const V3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
V3 cross(const V3& a, const V3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
real norm2(const V3& a) { return dot(a, a); }
real norm(const V3& a) { return std::sqrt(norm2(a)); }
V3 ext(const Vec3& v) { return {v.x, v.y, v.z}; }
Vec3 narrow(const V3& v) {
  return {static_cast<double>(v.x), static_cast<double>(v.y), static_cast<double>(v.z)};
}

struct Basis {
  V3 rho, alpha, delta;
};

Basis basis(real a, real d) {
  const real ca = std::cos(a), sa = std::sin(a), cd = std::cos(d), sd = std::sin(d);
  return {{cd * ca, cd * sa, sd}, {-sa, ca, 0}, {-sd * ca, -sd * sa, cd}};
}

struct Frame {
  Basis b1, b2;
  V3 q1, qdot1, q2, qdot2;
  V3 r1;
  V3 e_perp2;  // transverse velocity direction of the second epoch per unit rho2
  real mu = 0;
  real r_scale = 1;
  real v_scale = 1;
};

Frame frame(const ODInput& in) {
  Frame f;
  if (!(std::abs(in.p1.delta) < 0.5 * std::numbers::pi) || !(std::abs(in.a2.delta) < 0.5 * std::numbers::pi))
    throw OdError(ErrorKind::DegenerateGeometry, "line of sight at a pole");
  f.b1 = basis(in.p1.alpha, in.p1.delta);
  f.b2 = basis(in.a2.alpha, in.a2.delta);
  f.q1 = ext(in.obs1.q);
  f.qdot1 = ext(in.obs1.qdot);
  f.q2 = ext(in.obs2.q);
  f.qdot2 = ext(in.obs2.qdot);
  f.mu = in.mu;
  f.r1 = f.q1 + static_cast<real>(in.p1.rho) * f.b1.rho;
  f.e_perp2 = static_cast<real>(in.a2.alphadot) * std::cos(static_cast<real>(in.a2.delta)) * f.b2.alpha +
              static_cast<real>(in.a2.deltadot) * f.b2.delta;
  f.r_scale = norm(f.r1);
  f.v_scale = std::sqrt(f.mu / f.r_scale);
  return f;
}

using P6 = std::array<real, 6>;

struct StatesX {
  V3 r1, v1, r2, v2;
};

StatesX states(const Frame& f, const P6& x) {
  StatesX s;
  s.r1 = f.r1;
  s.v1 = f.qdot1 + x[0] * f.b1.rho + x[1] * f.b1.alpha + x[2] * f.b1.delta;
  s.r2 = f.q2 + x[3] * f.b2.rho;
  s.v2 = f.qdot2 + x[4] * f.b2.rho + x[3] * f.e_perp2;
  return s;
}

P6 ext(const Point6& x) {
  P6 out;
  for (int k = 0; k < 6; ++k) out[k] = x[k];
  return out;
}

Point6 narrow(const P6& x) {
  Point6 out;
  for (int k = 0; k < 6; ++k) out[k] = static_cast<double>(x[k]);
  return out;
}

// mu L for the first epoch and its z2 analogue for the second.
V3 mu_laplace1(const StatesX& s, real mu) {
  return (norm2(s.v1) - mu / norm(s.r1)) * s.r1 - dot(s.v1, s.r1) * s.v1;
}

V3 mu_laplace2(const StatesX& s, real z2) { return (norm2(s.v2) - z2) * s.r2 - dot(s.v2, s.r2) * s.v2; }

real energy1(const StatesX& s, real mu) { return 0.5L * norm2(s.v1) - mu / norm(s.r1); }

std::array<real, 7> residuals(const Frame& f, const P6& x) {
  const StatesX s = states(f, x);
  const real cs = f.r_scale * f.v_scale;
  const V3 dc = cross(s.r1, s.v1) - cross(s.r2, s.v2);
  const V3 dl = mu_laplace1(s, f.mu) - mu_laplace2(s, x[5]);
  const real de = (energy1(s, f.mu) - (0.5L * norm2(s.v2) - x[5])) * f.r_scale / f.mu;
  return {dc.x / cs, dc.y / cs, dc.z / cs, dl.x / f.mu, dl.y / f.mu, dl.z / f.mu, de};
}

double max_abs(const std::array<real, 7>& r) {
  real m = 0;
  for (real v : r) m = std::isfinite(v) ? std::max(m, std::abs(v)) : std::numeric_limits<real>::infinity();
  return static_cast<double>(m);
}

struct LinePointX {
  P6 x;
  real q5 = 0, q6 = 0;
};

LinePointX line_point(const Frame& f, real rho2, real t, LineParam param) {
  // c1 - c2 = A (xi1, zeta1, rhodot1, rhodot2) + k
  const V3 r2 = f.q2 + rho2 * f.b2.rho;
  const std::array<V3, 4> cols{cross(f.r1, f.b1.alpha), cross(f.r1, f.b1.delta), cross(f.r1, f.b1.rho),
                               -cross(r2, f.b2.rho)};
  const V3 k = cross(f.r1, f.qdot1) - cross(r2, f.qdot2 + rho2 * f.e_perp2);
  const int p = param == LineParam::Xi1 ? 0 : 1;
  using M3 = Eigen::Matrix<real, 3, 3>;
  using C3 = Eigen::Matrix<real, 3, 1>;
  M3 m;
  C3 rhs(-k.x, -k.y, -k.z);
  int c = 0;
  for (int j = 0; j < 4; ++j) {
    if (j == p) {
      rhs -= t * C3(cols[j].x, cols[j].y, cols[j].z);
      continue;
    }
    m.col(c++) = C3(cols[j].x, cols[j].y, cols[j].z);
  }
  const C3 y = m.fullPivLu().solve(rhs);
  std::array<real, 4> all{};
  for (int j = 0, i = 0; j < 4; ++j) all[j] = j == p ? t : y[i++];

  LinePointX out;
  out.x = {all[2], all[0], all[1], rho2, all[3], 0};
  const StatesX s = states(f, out.x);
  out.x[5] = 0.5L * norm2(s.v2) - energy1(s, f.mu);
  const V3 dl = mu_laplace1(s, f.mu) - mu_laplace2(s, out.x[5]);
  out.q5 = dot(dl, cross(f.q2, f.b2.rho));
  out.q6 = dot(dl, cross(f.r1, f.b2.rho));
  return out;
}

LineSample sample_line(const Frame& f, real rho2, LineParam param) {
  // q5 is affine and q6 quadratic in t along the line; three samples fix both.
  // The q6 fit is taken again over a span reaching -a0/a1 when that lies
  // outside the first one, so the value there is interpolated.
  real s = f.v_scale;
  LinePointX lm = line_point(f, rho2, -s, param);
  const LinePointX l0 = line_point(f, rho2, 0, param);
  LinePointX lp = line_point(f, rho2, s, param);
  const real a1 = (lp.q5 - lm.q5) / (2 * s), a0 = l0.q5;
  const real t = a1 != 0 ? -a0 / a1 : 0;
  if (std::isfinite(t) && std::abs(t) > s) {
    s = std::abs(t);
    lm = line_point(f, rho2, -s, param);
    lp = line_point(f, rho2, s, param);
  }
  const real p20 = (lp.q6 - 2 * l0.q6 + lm.q6) / (2 * s * s);
  const real b1 = (lp.q6 - lm.q6) / (2 * s), b0 = l0.q6;
  LineSample out;
  out.a1 = static_cast<double>(a1);
  out.a0 = static_cast<double>(a0);
  out.h = static_cast<double>(-(p20 * a0 * a0 - b1 * a0 * a1 + b0 * a1 * a1));
  out.scale = static_cast<double>(std::abs(p20 * a0 * a0) + std::abs(b1 * a0 * a1) + std::abs(b0 * a1 * a1));
  out.g = a1 != 0 ? static_cast<double>(line_point(f, rho2, t, param).q6)
                  : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace

States states(const ODInput& input, const Point6& x) {
  const StatesX s = states(frame(input), ext(x));
  return {narrow(s.r1), narrow(s.v1), narrow(s.r2), narrow(s.v2)};
}

std::array<double, 7> reduced_residuals(const ODInput& input, const Point6& x) {
  const auto r = residuals(frame(input), ext(x));
  std::array<double, 7> out;
  for (int k = 0; k < 7; ++k) out[k] = static_cast<double>(r[k]);
  return out;
}

LinePoint line_point(const ODInput& input, double rho2, double t, LineParam param) {
  const LinePointX p = line_point(frame(input), rho2, t, param);
  return {narrow(p.x), static_cast<double>(p.q5), static_cast<double>(p.q6)};
}

LineSample sample_line(const ODInput& input, double rho2, LineParam param) {
  return sample_line(frame(input), rho2, param);
}

BracketScan scan_roots(const ODInput& input, double rho2_max, int n, LineParam param) {
  if (n < 2 || !(rho2_max > 0.0)) throw OdError(ErrorKind::ValidationError, "scan needs n >= 2 and rho2_max > 0");
  const Frame f = frame(input);
  BracketScan out;
  out.param = param;
  const double lo = std::log(1e-4 * rho2_max), hi = std::log(rho2_max);
  for (int i = 0; i < n; ++i) {
    const double rho = i == n - 1 ? rho2_max : std::exp(lo + (hi - lo) * i / (n - 1));
    const LineSample s = sample_line(f, rho, param);
    out.grid.push_back(rho);
    out.g_values.push_back(s.g);
    out.h_values.push_back(s.h);
  }
  auto h_at = [&](double rho) { return sample_line(f, rho, param).h; };
  auto bisect = [&](double a, double b, double ha) {
    out.brackets.emplace_back(a, b);
    while (b - a > 1e-10) {
      const double m = 0.5 * (a + b);
      const double hm = h_at(m);
      if (hm == 0.0) {
        a = b = m;
        break;
      }
      if ((hm < 0.0) == (ha < 0.0)) {
        a = m;
        ha = hm;
      } else {
        b = m;
      }
    }
    out.roots.push_back(0.5 * (a + b));
  };
  auto dip = [](double l, double m, double r) {
    return l != 0.0 && m != 0.0 && r != 0.0 && (l < 0.0) == (m < 0.0) && (m < 0.0) == (r < 0.0) &&
           std::abs(m) < std::abs(l) && std::abs(m) <= std::abs(r);
  };
  for (int i = 0; i < n; ++i) {
    const double h0 = out.h_values[i];
    if (h0 == 0.0) {
      out.brackets.emplace_back(out.grid[i], out.grid[i]);
      out.roots.push_back(out.grid[i]);
      continue;
    }
    if (i + 1 == n) break;
    const double h1 = out.h_values[i + 1];
    if (h1 == 0.0 || (h0 < 0.0) == (h1 < 0.0)) continue;
    bisect(out.grid[i], out.grid[i + 1], h0);
  }

  // Two roots inside one cell leave no sign change, only a dip in |h|.
  // Resample around every sampled minimum of |h| without a crossing.
  constexpr int kSub = 32;
  constexpr int kDepth = 4;
  std::function<void(double, double, int)> resample = [&](double a, double b, int depth) {
    std::vector<double> xs(kSub + 1), hs(kSub + 1);
    for (int k = 0; k <= kSub; ++k) {
      xs[k] = a + (b - a) * k / kSub;
      hs[k] = h_at(xs[k]);
    }
    for (int k = 0; k < kSub; ++k) {
      if (k > 0 && hs[k] == 0.0) {
        out.brackets.emplace_back(xs[k], xs[k]);
        out.roots.push_back(xs[k]);
      } else if (hs[k] != 0.0 && hs[k + 1] != 0.0 && (hs[k] < 0.0) != (hs[k + 1] < 0.0)) {
        bisect(xs[k], xs[k + 1], hs[k]);
      }
    }
    if (depth == kDepth) return;
    for (int k = 1; k < kSub; ++k)
      if (dip(hs[k - 1], hs[k], hs[k + 1])) resample(xs[k - 1], xs[k + 1], depth + 1);
  };
  for (int i = 1; i + 1 < n; ++i)
    if (dip(out.h_values[i - 1], out.h_values[i], out.h_values[i + 1]))
      resample(out.grid[i - 1], out.grid[i + 1], 1);

  std::sort(out.brackets.begin(), out.brackets.end());
  std::sort(out.roots.begin(), out.roots.end());
  return out;
}

namespace {

std::optional<NewtonResult> refine(const Frame& f, const Point6& seed, const NewtonConfig& config) {
  using Vec7 = Eigen::Matrix<real, 7, 1>;
  using Vec6 = Eigen::Matrix<real, 6, 1>;
  const real v = f.v_scale, r = f.r_scale;
  const std::array<real, 6> sc{v, v, v, r, v, f.mu / r};
  auto point = [&](const Vec6& u) {
    P6 x;
    for (int k = 0; k < 6; ++k) x[k] = u[k] * sc[k];
    return x;
  };
  auto eval = [&](const Vec6& u) {
    const auto res = residuals(f, point(u));
    return Vec7(Eigen::Map<const Vec7>(res.data()));
  };
  Vec6 u;
  for (int k = 0; k < 6; ++k) u[k] = seed[k] / sc[k];
  if (!u.allFinite()) return std::nullopt;
  Vec7 res = eval(u);
  real cost = res.squaredNorm();
  real lambda = 1e-6L;
  int it = 0;
  for (; it < config.max_iterations && std::isfinite(cost) && cost > 0; ++it) {
    Eigen::Matrix<real, 7, 6> jac;
    for (int k = 0; k < 6; ++k) {
      const real h = 1e-8L * std::max<real>(1, std::abs(u[k]));
      Vec6 up = u, um = u;
      up[k] += h;
      um[k] -= h;
      jac.col(k) = (eval(up) - eval(um)) / (2 * h);
    }
    if (!jac.allFinite()) break;
    const Vec6 dscale = jac.colwise().norm().transpose().cwiseMax(std::numeric_limits<real>::min());
    bool improved = false;
    for (int tries = 0; tries < 20 && !improved; ++tries) {
      // min |J du + r|^2 + lambda |diag(D) du|^2 by QR on the stacked system;
      // normal equations would square the conditioning.
      Eigen::Matrix<real, 13, 6> a = Eigen::Matrix<real, 13, 6>::Zero();
      a.topRows<7>() = jac;
      a.bottomRows<6>().diagonal() = std::sqrt(lambda) * dscale;
      Eigen::Matrix<real, 13, 1> rhs = Eigen::Matrix<real, 13, 1>::Zero();
      rhs.head<7>() = -res;
      const Vec6 du = a.colPivHouseholderQr().solve(rhs);
      if (!du.allFinite()) {
        lambda *= 10;
        continue;
      }
      const Vec6 un = u + du;
      const Vec7 rn = eval(un);
      const real cn = rn.squaredNorm();
      if (std::isfinite(cn) && cn < cost) {
        u = un;
        res = rn;
        cost = cn;
        lambda = std::max<real>(lambda * 0.1L, 1e-24L);
        improved = true;
      } else {
        lambda *= 10;
      }
    }
    if (!improved) break;
  }
  NewtonResult out;
  out.x = narrow(point(u));
  out.residual = max_abs(residuals(f, point(u)));
  out.iterations = it;
  if (!(out.residual <= config.tol)) return std::nullopt;
  return out;
}

}  // namespace

std::optional<NewtonResult> newton_refine_system(const ODInput& input, const Point6& seed,
                                                 const NewtonConfig& config) {
  return refine(frame(input), seed, config);
}

std::vector<NewtonResult> multi_start(const ODInput& input, int starts, std::uint64_t seed,
                                      const NewtonConfig& config) {
  const Frame f = frame(input);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> log_rho(std::log(0.05), std::log(10.0));
  std::normal_distribution<double> vel(0.0, 0.5 * static_cast<double>(f.v_scale));
  std::vector<NewtonResult> found;
  for (int k = 0; k < starts; ++k) {
    Point6 x;
    x[3] = std::exp(log_rho(rng));
    x[0] = vel(rng);
    x[1] = vel(rng);
    x[2] = vel(rng);
    x[4] = vel(rng);
    x[5] = input.mu / static_cast<double>(norm(f.q2 + static_cast<real>(x[3]) * f.b2.rho));
    const auto sol = refine(f, x, config);
    if (!sol) continue;
    const bool fresh = std::none_of(found.begin(), found.end(), [&](const NewtonResult& s) {
      return std::abs(s.x[3] - sol->x[3]) <= 1e-8 * std::abs(sol->x[3]);
    });
    if (fresh) found.push_back(*sol);
  }
  std::sort(found.begin(), found.end(),
            [](const NewtonResult& a, const NewtonResult& b) { return a.x[3] < b.x[3]; });
  return found;
}

Eigen::Matrix<double, 5, 1> s_tilde(const ODInput& input, const Point6& x) {
  Eigen::Matrix<double, 5, 1> s;
  s << x[1] / (input.p1.rho * std::cos(input.p1.delta)), x[2] / input.p1.rho, x[0], x[3], x[4];
  return s;
}

namespace {

double& data_field(ODInput& in, int j) {
  switch (j) {
    case 0: return in.p1.alpha;
    case 1: return in.p1.delta;
    case 2: return in.p1.rho;
    case 3: return in.a2.alpha;
    case 4: return in.a2.delta;
    case 5: return in.a2.alphadot;
    default: return in.a2.deltadot;
  }
}

double data_value(ODInput in, int j) { return data_field(in, j); }

// d/dx at 0 of the interpolant through (nodes[i], values[i]); one node is 0.
Eigen::Matrix<double, 5, 1> derivative_at_zero(const std::vector<double>& nodes,
                                               const std::vector<Eigen::Matrix<double, 5, 1>>& values) {
  const std::size_t n = nodes.size();
  Eigen::Matrix<double, 5, 1> d = Eigen::Matrix<double, 5, 1>::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    real w = 0;
    if (nodes[i] == 0.0) {
      for (std::size_t m = 0; m < n; ++m)
        if (m != i) w += 1 / (0 - static_cast<real>(nodes[m]));
    } else {
      w = 1 / static_cast<real>(nodes[i]);
      for (std::size_t m = 0; m < n; ++m)
        if (m != i && nodes[m] != 0.0)
          w *= (0 - static_cast<real>(nodes[m])) / (static_cast<real>(nodes[i]) - nodes[m]);
    }
    d += static_cast<double>(w) * values[i];
  }
  return d;
}

}  // namespace

Eigen::Matrix<double, 5, 7> implicit_jacobian_fd(const ODInput& input, const Point6& x,
                                                 double max_rel_step) {
  const std::array<double, 7> scale{1.0, 1.0, input.p1.rho, 1.0, 1.0,
                                    std::max(std::abs(input.a2.alphadot), 1e-3),
                                    std::max(std::abs(input.a2.deltadot), 1e-3)};
  NewtonConfig loose;
  loose.tol = 1.0;
  const auto base = newton_refine_system(input, x, loose);
  if (!base) throw OdError(ErrorKind::NoConvergence, "unperturbed reduced system did not converge");
  NewtonConfig tight;
  tight.max_iterations = 60;
  tight.tol = std::max(1e-12, 100.0 * base->residual);
  const Point6 x0 = base->x;
  const Eigen::Matrix<double, 5, 1> s0 = s_tilde(input, x0);

  auto perturbed = [&](int j, double offset) {
    ODInput in = input;
    data_field(in, j) += offset;
    return in;
  };
  auto residual_vec = [](const ODInput& in, const Point6& p) {
    const auto r = residuals(frame(in), ext(p));
    Eigen::Matrix<real, 7, 1> out;
    for (int k = 0; k < 7; ++k) out[k] = r[k];
    return out;
  };

  // First-order predictor dx/dD = -J_x^+ J_D, only used to seed the solves.
  Eigen::Matrix<real, 7, 6> jx;
  for (int k = 0; k < 6; ++k) {
    const double h = 1e-7 * std::max(std::abs(x0[k]), 1e-3 * std::max(std::abs(x0[3]), 1.0));
    Point6 xp = x0, xm = x0;
    xp[k] += h;
    xm[k] -= h;
    jx.col(k) = (residual_vec(input, xp) - residual_vec(input, xm)) / static_cast<real>(xp[k] - xm[k]);
  }
  const auto qr = jx.colPivHouseholderQr();

  Eigen::Matrix<double, 5, 7> out;
  for (int j = 0; j < 7; ++j) {
    Eigen::Matrix<real, 7, 1> jd;
    {
      const double h = 1e-7 * scale[j];
      const ODInput ip = perturbed(j, h), im = perturbed(j, -h);
      jd = (residual_vec(ip, x0) - residual_vec(im, x0)) /
           static_cast<real>(data_value(ip, j) - data_value(im, j));
    }
    const Eigen::Matrix<real, 6, 1> slope = -qr.solve(jd);

    // xi1, zeta1 carry rho1 cos(delta1) and rho1, which move with the data.
    auto solve_at = [&](double offset) -> std::optional<Eigen::Matrix<double, 5, 1>> {
      const ODInput in = perturbed(j, offset);
      const double actual = data_value(in, j) - data_value(input, j);
      Point6 seed;
      for (int k = 0; k < 6; ++k) seed[k] = x0[k] + static_cast<double>(slope[k] * actual);
      const auto sol = newton_refine_system(in, seed, tight);
      if (!sol) return std::nullopt;
      return s_tilde(in, sol->x);
    };
    // Five-point stencil on the representable offsets.
    auto stencil = [&](double h) -> std::optional<Eigen::Matrix<double, 5, 1>> {
      std::vector<double> nodes{0.0};
      std::vector<Eigen::Matrix<double, 5, 1>> values{s0};
      for (double m : {-2.0, -1.0, 1.0, 2.0}) {
        const auto v = solve_at(m * h);
        if (!v) return std::nullopt;
        nodes.push_back(data_value(perturbed(j, m * h), j) - data_value(input, j));
        values.push_back(*v);
      }
      return derivative_at_zero(nodes, values);
    };

    // Steps shrink by 3 from max_rel_step; the estimate kept is the one that
    // agrees best with its successor, trading truncation against noise.
    std::vector<Eigen::Matrix<double, 5, 1>> est;
    double h = max_rel_step * scale[j];
    for (int k = 0; k < 8; ++k, h /= 3.0)
      if (auto e = stencil(h)) est.push_back(*e);
    if (est.empty()) throw OdError(ErrorKind::NoConvergence, "perturbed reduced system did not converge");
    std::size_t best = est.size() - 1;
    double best_gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < est.size(); ++k) {
      const double gap = (est[k] - est[k + 1]).norm();
      if (gap < best_gap) {
        best_gap = gap;
        best = k + 1;
      }
    }
    out.col(j) = est[best];
  }
  return out;
}

}  // namespace kepod::oracle
