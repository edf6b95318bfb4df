#pragma once

#include <array>
#include <cmath>

namespace kepod {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x; y += o.y; z += o.z;
    return *this;
  }
  constexpr Vec3& operator-=(const Vec3& o) {
    x -= o.x; y -= o.y; z -= o.z;
    return *this;
  }
  constexpr Vec3& operator*=(double s) {
    x *= s; y *= s; z *= s;
    return *this;
  }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator/(Vec3 a, double s) { return a *= (1.0 / s); }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

/// a . (b x c)
constexpr double triple(const Vec3& a, const Vec3& b, const Vec3& c) { return dot(a, cross(b, c)); }

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
constexpr double norm2(const Vec3& a) { return dot(a, a); }
inline Vec3 unit(const Vec3& a) { return a / norm(a); }

/// 3x3 matrix, row-major.
struct Mat3 {
  std::array<double, 9> m{};

  constexpr double operator()(int r, int c) const { return m[3 * r + c]; }
  constexpr double& operator()(int r, int c) { return m[3 * r + c]; }

  static constexpr Mat3 identity() { return Mat3{{1, 0, 0, 0, 1, 0, 0, 0, 1}}; }

  constexpr Mat3 transposed() const {
    return Mat3{{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
  }
  friend constexpr bool operator==(const Mat3&, const Mat3&) = default;
};

constexpr Vec3 operator*(const Mat3& a, const Vec3& v) {
  return {a(0, 0) * v.x + a(0, 1) * v.y + a(0, 2) * v.z,
          a(1, 0) * v.x + a(1, 1) * v.y + a(1, 2) * v.z,
          a(2, 0) * v.x + a(2, 1) * v.y + a(2, 2) * v.z};
}

constexpr Mat3 operator*(const Mat3& a, const Mat3& b) {
  Mat3 out;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

constexpr Mat3 operator+(const Mat3& a, const Mat3& b) {
  Mat3 out;
  for (int i = 0; i < 9; ++i) out.m[i] = a.m[i] + b.m[i];
  return out;
}

constexpr Mat3 operator*(double s, const Mat3& a) {
  Mat3 out;
  for (int i = 0; i < 9; ++i) out.m[i] = s * a.m[i];
  return out;
}

/// Cross-product matrix: hat(u) * w == cross(u, w).
constexpr Mat3 hat(const Vec3& u) {
  return Mat3{{0.0, -u.z, u.y, u.z, 0.0, -u.x, -u.y, u.x, 0.0}};
}

/// a b^T
constexpr Mat3 outer(const Vec3& a, const Vec3& b) {
  return Mat3{{a.x * b.x, a.x * b.y, a.x * b.z, a.y * b.x, a.y * b.y, a.y * b.z, a.z * b.x,
               a.z * b.y, a.z * b.z}};
}

/// Topocentric spherical frame at (alpha, delta).
///
/// rho   = (cos d cos a, cos d sin a, sin d)
/// alpha = (-sin a, cos a, 0)                      (d rho / d alpha) / cos d
/// delta = (-sin d cos a, -sin d sin a, cos d)     d rho / d delta
///
/// The triple satisfies alpha x delta = rho, so (rho, alpha, delta) is a
/// right-handed orthonormal basis.
struct LosBasis {
  Vec3 rho;
  Vec3 alpha;
  Vec3 delta;
};

/// Throws OdError(DegenerateGeometry) when |delta| >= pi/2 - 1e-12.
LosBasis los_basis(double alpha, double delta);

/// Wraps an angle to (-pi, pi].
double wrap_pi(double angle);
/// Wraps an angle to [0, 2 pi).
double wrap_two_pi(double angle);

}  // namespace kepod
