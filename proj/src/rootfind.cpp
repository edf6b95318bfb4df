#include "kepod/rootfind.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "kepod/errors.hpp"

namespace kepod {

namespace {

using cplx = std::complex<double>;

cplx horner(std::span<const double> c, cplx z, cplx* derivative) {
  cplx p = 0.0, dp = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) {
    dp = dp * z + p;
    p = p * z + c[k];
  }
  if (derivative) *derivative = dp;
  return p;
}

double relative_residual(std::span<const double> c, cplx z) {
  double scale = 0.0, zk = 1.0;
  const double az = std::abs(z);
  for (double ck : c) {
    scale += std::abs(ck) * zk;
    zk *= az;
  }
  const double p = std::abs(horner(c, z, nullptr));
  return scale > 0.0 ? p / scale : p;
}

// Parlett-Reinsch balancing with radix-2 scaling; similarity preserves eigenvalues.
void balance(Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  bool converged = false;
  while (!converged) {
    converged = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i));
        r += std::abs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / 2.0, f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= 2.0;
        c *= 4.0;
      }
      g = r * 2.0;
      while (c > g) {
        f /= 2.0;
        c /= 4.0;
      }
      if ((c + r) / f < 0.95 * s) {
        converged = false;
        a.row(i) /= f;
        a.col(i) *= f;
      }
    }
  }
}

struct Companion {
  std::vector<double> c;  // normalized, trimmed
  std::vector<cplx> eigenvalues;
};

Companion companion(std::span<const double> coeffs, const RootConfig& config) {
  double max_abs = 0.0;
  for (double c : coeffs) max_abs = std::max(max_abs, std::abs(c));
  if (max_abs == 0.0) throw OdError(ErrorKind::AllCoefficientsZero, "polynomial is identically zero");

  std::size_t deg = coeffs.size() - 1;
  while (deg > 0 && std::abs(coeffs[deg]) <= config.trim_rel * max_abs) --deg;
  Companion out;
  out.c.assign(coeffs.begin(), coeffs.begin() + deg + 1);
  for (double& x : out.c) x /= max_abs;
  if (deg == 0) return out;

  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
  for (std::size_t i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (std::size_t i = 0; i < deg; ++i) comp(i, deg - 1) = -out.c[i] / out.c[deg];
  balance(comp);

  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
  const Eigen::VectorXcd ev = es.eigenvalues();
  for (Eigen::Index k = 0; k < ev.size(); ++k) out.eigenvalues.push_back(ev[k]);
  return out;
}

RootSet finish(std::vector<Root> roots, const RootConfig& config) {
  RootSet out;
  out.roots = std::move(roots);
  for (auto& r : out.roots) {
    int count = 0;
    for (const auto& other : out.roots)
      if (std::abs(other.value - r.value) <= config.tol_dup * (1.0 + std::abs(r.value))) ++count;
    r.multiplicity_hint = count;
  }
  std::sort(out.roots.begin(), out.roots.end(), [](const Root& a, const Root& b) {
    return a.value.real() != b.value.real() ? a.value.real() < b.value.real()
                                            : a.value.imag() < b.value.imag();
  });
  for (const auto& r : out.roots)
    if (std::abs(r.value.imag()) <= config.tol_im * (1.0 + std::abs(r.value.real())))
      out.real_roots.push_back(r.value.real());
  return out;
}

}  // namespace

RootSet all_roots(std::span<const double> coeffs, const RootConfig& config) {
  const Companion comp = companion(coeffs, config);
  std::vector<Root> roots;
  for (cplx z : comp.eigenvalues) {
    double res = relative_residual(comp.c, z);
    for (int step = 0; step < config.polish_steps; ++step) {
      cplx dp;
      const cplx p = horner(comp.c, z, &dp);
      if (dp == 0.0) break;
      const cplx next = z - p / dp;
      const double next_res = relative_residual(comp.c, next);
      if (!(next_res <= res)) break;
      z = next;
      res = next_res;
    }
    roots.push_back(Root{z, 1, res});
  }
  return finish(std::move(roots), config);
}

RootSet all_roots(std::span<const double> coeffs, const PolyEvaluator& eval, const RootConfig& config) {
  const Companion comp = companion(coeffs, config);
  const std::size_t n = comp.eigenvalues.size();
  std::vector<cplx> z(comp.eigenvalues);
  // Conjugate starts stay conjugate under the sweep; a slight twist lets a
  // pair split into two real roots.
  for (std::size_t k = 0; k < n; ++k) z[k] *= cplx(1.0, 1e-9 * static_cast<double>(k + 1));

  auto residual = [&](cplx x) {
    double scale = 0.0;
    const double v = std::abs(eval(x, nullptr, &scale));
    return scale > 0.0 ? v / scale : v;
  };
  for (int it = 0; it < config.aberth_iterations; ++it) {
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      cplx d;
      const cplx f = eval(z[k], &d, nullptr);
      if (f == 0.0) continue;
      const cplx w = f / d;
      cplx s = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != k) s += 1.0 / (z[k] - z[j]);
      const cplx dz = w / (1.0 - w * s);
      if (!std::isfinite(dz.real()) || !std::isfinite(dz.imag())) continue;
      z[k] -= dz;
      worst = std::max(worst, std::abs(dz) / std::max(1.0, std::abs(z[k])));
    }
    if (worst <= 4e-16) break;
  }

  std::vector<Root> roots;
  for (std::size_t k = 0; k < n; ++k) {
    // Keep the eigenvalue if the sweep made things worse, e.g. at a huge
    // root of a nearly degenerate leading coefficient.
    const double r_new = residual(z[k]), r_old = residual(comp.eigenvalues[k]);
    const bool finite = std::isfinite(z[k].real()) && std::isfinite(z[k].imag());
    roots.push_back(finite && r_new <= r_old ? Root{z[k], 1, r_new} : Root{comp.eigenvalues[k], 1, r_old});
  }
  return finish(std::move(roots), config);
}

RootSet all_roots(const ResultantPoly& p, const RootConfig& config) {
  if (!p.has_grouped()) return all_roots(std::span<const double>(p.v), config);
  return all_roots(std::span<const double>(p.v),
                   [&p](cplx z, cplx* d, double* scale) { return p.eval_grouped(z, d, scale); }, config);
}

std::vector<double> filter_real_positive(const RootSet& rs, const RootConfig& config) {
  std::vector<double> candidates;
  for (const auto& r : rs.roots) {
    const double re = r.value.real();
    if (std::abs(r.value.imag()) <= config.tol_im * (1.0 + std::abs(re)) && re > 0.0)
      candidates.push_back(re);
  }
  std::sort(candidates.begin(), candidates.end());
  std::vector<double> out;
  std::size_t i = 0;
  while (i < candidates.size()) {
    std::size_t j = i + 1;
    double sum = candidates[i];
    while (j < candidates.size() &&
           candidates[j] - candidates[j - 1] <= config.tol_dup * (1.0 + std::abs(candidates[j]))) {
      sum += candidates[j];
      ++j;
    }
    out.push_back(sum / static_cast<double>(j - i));
    i = j;
  }
  return out;
}

}  // namespace kepod
