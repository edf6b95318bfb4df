#include "kepod/bipoly.hpp"

#include <algorithm>

namespace kepod {

namespace poly1 {

std::vector<double> add(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
  return out;
}

std::vector<double> sub(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[i] -= b[i];
  return out;
}

std::vector<double> mul(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  std::vector<double> out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

std::vector<double> scale(std::span<const double> a, double s) {
  std::vector<double> out(a.begin(), a.end());
  for (double& x : out) x *= s;
  return out;
}

double eval(std::span<const double> a, double x) {
  double acc = 0.0;
  for (std::size_t k = a.size(); k-- > 0;) acc = acc * x + a[k];
  return acc;
}

std::pair<double, double> eval_d(std::span<const double> a, double x) {
  double p = 0.0, dp = 0.0;
  for (std::size_t k = a.size(); k-- > 0;) {
    dp = dp * x + p;
    p = p * x + a[k];
  }
  return {p, dp};
}

}  // namespace poly1

BiPoly::BiPoly(int deg_t, int deg_rho)
    : deg_t_(deg_t), deg_rho_(deg_rho), c_((deg_t + 1) * (deg_rho + 1), 0.0) {}

BiPoly BiPoly::constant(double c) {
  BiPoly p(0, 0);
  p.c_[0] = c;
  return p;
}

BiPoly BiPoly::monomial(double c, int i, int j) {
  BiPoly p(i, j);
  p.at(i, j) = c;
  return p;
}

double BiPoly::coeff(int i, int j) const {
  if (i < 0 || j < 0 || i > deg_t_ || j > deg_rho_) return 0.0;
  return c_[i * (deg_rho_ + 1) + j];
}

double& BiPoly::at(int i, int j) {
  if (i > deg_t_ || j > deg_rho_) grow(std::max(i, deg_t_), std::max(j, deg_rho_));
  return c_[i * (deg_rho_ + 1) + j];
}

void BiPoly::grow(int deg_t, int deg_rho) {
  BiPoly bigger(deg_t, deg_rho);
  for (int i = 0; i <= deg_t_; ++i)
    for (int j = 0; j <= deg_rho_; ++j) bigger.at(i, j) = coeff(i, j);
  *this = std::move(bigger);
}

double BiPoly::eval(double t, double rho) const {
  double acc = 0.0;
  for (int i = deg_t_; i >= 0; --i) {
    double inner = 0.0;
    for (int j = deg_rho_; j >= 0; --j) inner = inner * rho + coeff(i, j);
    acc = acc * t + inner;
  }
  return acc;
}

std::vector<double> BiPoly::row(int i) const {
  std::vector<double> out(std::max(deg_rho_ + 1, 0), 0.0);
  for (int j = 0; j <= deg_rho_; ++j) out[j] = coeff(i, j);
  return out;
}

BiPoly& BiPoly::operator+=(const BiPoly& o) {
  if (o.deg_t_ > deg_t_ || o.deg_rho_ > deg_rho_)
    grow(std::max(deg_t_, o.deg_t_), std::max(deg_rho_, o.deg_rho_));
  for (int i = 0; i <= o.deg_t_; ++i)
    for (int j = 0; j <= o.deg_rho_; ++j) at(i, j) += o.coeff(i, j);
  return *this;
}

BiPoly& BiPoly::operator-=(const BiPoly& o) {
  if (o.deg_t_ > deg_t_ || o.deg_rho_ > deg_rho_)
    grow(std::max(deg_t_, o.deg_t_), std::max(deg_rho_, o.deg_rho_));
  for (int i = 0; i <= o.deg_t_; ++i)
    for (int j = 0; j <= o.deg_rho_; ++j) at(i, j) -= o.coeff(i, j);
  return *this;
}

BiPoly& BiPoly::operator*=(double s) {
  for (double& x : c_) x *= s;
  return *this;
}

BiPoly operator*(const BiPoly& a, const BiPoly& b) {
  if (a.empty() || b.empty()) return {};
  BiPoly out(a.deg_t_ + b.deg_t_, a.deg_rho_ + b.deg_rho_);
  for (int i = 0; i <= a.deg_t_; ++i)
    for (int j = 0; j <= a.deg_rho_; ++j) {
      const double ca = a.coeff(i, j);
      if (ca == 0.0) continue;
      for (int k = 0; k <= b.deg_t_; ++k)
        for (int l = 0; l <= b.deg_rho_; ++l) out.at(i + k, j + l) += ca * b.coeff(k, l);
    }
  return out;
}

VecBiPoly constant_vec(const Vec3& v) {
  return {BiPoly::constant(v.x), BiPoly::constant(v.y), BiPoly::constant(v.z)};
}

VecBiPoly times(const BiPoly& p, const Vec3& v) { return {p * v.x, p * v.y, p * v.z}; }

VecBiPoly times(const BiPoly& p, const VecBiPoly& v) { return {p * v[0], p * v[1], p * v[2]}; }

VecBiPoly operator+(const VecBiPoly& a, const VecBiPoly& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

VecBiPoly operator-(const VecBiPoly& a, const VecBiPoly& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

BiPoly dot(const VecBiPoly& a, const VecBiPoly& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

BiPoly dot(const VecBiPoly& a, const Vec3& b) { return a[0] * b.x + a[1] * b.y + a[2] * b.z; }

}  // namespace kepod
