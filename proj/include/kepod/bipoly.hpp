#pragma once

#include <array>
#include <span>
#include <vector>

#include "kepod/geom3.hpp"

namespace kepod {

/// Univariate polynomial helpers on ascending coefficient vectors.
namespace poly1 {
std::vector<double> add(std::span<const double> a, std::span<const double> b);
std::vector<double> sub(std::span<const double> a, std::span<const double> b);
std::vector<double> mul(std::span<const double> a, std::span<const double> b);
std::vector<double> scale(std::span<const double> a, double s);
double eval(std::span<const double> a, double x);
/// Value and first derivative.
std::pair<double, double> eval_d(std::span<const double> a, double x);
}  // namespace poly1

/// Dense polynomial sum c(i, j) t^i rho^j with small degrees.
class BiPoly {
 public:
  BiPoly() = default;
  BiPoly(int deg_t, int deg_rho);

  static BiPoly constant(double c);
  static BiPoly monomial(double c, int i, int j);

  int deg_t() const { return deg_t_; }
  int deg_rho() const { return deg_rho_; }
  bool empty() const { return c_.empty(); }

  /// Zero outside the stored range.
  double coeff(int i, int j) const;
  double& at(int i, int j);

  double eval(double t, double rho) const;
  /// Coefficients of t^i as a polynomial in rho.
  std::vector<double> row(int i) const;

  BiPoly& operator+=(const BiPoly& o);
  BiPoly& operator-=(const BiPoly& o);
  BiPoly& operator*=(double s);

  friend BiPoly operator+(BiPoly a, const BiPoly& b) { return a += b; }
  friend BiPoly operator-(BiPoly a, const BiPoly& b) { return a -= b; }
  friend BiPoly operator*(BiPoly a, double s) { return a *= s; }
  friend BiPoly operator*(double s, BiPoly a) { return a *= s; }
  friend BiPoly operator*(const BiPoly& a, const BiPoly& b);

 private:
  void grow(int deg_t, int deg_rho);
  int deg_t_ = -1;
  int deg_rho_ = -1;
  std::vector<double> c_;  // (deg_t_+1) x (deg_rho_+1), row = power of t
};

using VecBiPoly = std::array<BiPoly, 3>;

VecBiPoly constant_vec(const Vec3& v);
/// p(t, rho) * v
VecBiPoly times(const BiPoly& p, const Vec3& v);
VecBiPoly times(const BiPoly& p, const VecBiPoly& v);
VecBiPoly operator+(const VecBiPoly& a, const VecBiPoly& b);
VecBiPoly operator-(const VecBiPoly& a, const VecBiPoly& b);
BiPoly dot(const VecBiPoly& a, const VecBiPoly& b);
BiPoly dot(const VecBiPoly& a, const Vec3& b);

}  // namespace kepod
