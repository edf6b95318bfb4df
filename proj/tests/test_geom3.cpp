#include "doctest.h"

#include <numbers>

#include <Eigen/Dense>

#include "kepod/errors.hpp"
#include "kepod/geom3.hpp"
#include "support.hpp"

using namespace kepod;

namespace {

Eigen::Vector3d ev(const Vec3& v) { return {v.x, v.y, v.z}; }

}  // namespace

TEST_CASE("los_basis on the axes") {
  const auto b0 = los_basis(0.0, 0.0);
  CHECK(b0.rho.x == doctest::Approx(1.0));
  CHECK(std::abs(b0.rho.y) < 1e-16);
  CHECK(std::abs(b0.rho.z) < 1e-16);

  const auto b1 = los_basis(std::numbers::pi / 2, 0.0);
  CHECK(std::abs(b1.rho.x) < 1e-16);
  CHECK(b1.rho.y == doctest::Approx(1.0));
  CHECK(std::abs(b1.rho.z) < 1e-16);
}

TEST_CASE("los_basis is orthonormal and right-handed") {
  const auto b = los_basis(0.3, -0.2);
  const Vec3 e[3] = {b.rho, b.alpha, b.delta};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(std::abs(dot(e[i], e[j]) - (i == j ? 1.0 : 0.0)) < 1e-14);
  CHECK(norm(cross(b.alpha, b.delta) - b.rho) < 1e-15);
}

TEST_CASE("los_basis Gram matrix on random directions") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> a(-std::numbers::pi, std::numbers::pi), d(-1.5, 1.5);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const auto b = los_basis(a(rng), d(rng));
    const Vec3 e[3] = {b.rho, b.alpha, b.delta};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(dot(e[i], e[j]) - (i == j)));
  }
  CHECK(worst < 1e-13);
}

TEST_CASE("los_basis rejects the poles") {
  CHECK_THROWS_AS(los_basis(0.1, std::numbers::pi / 2), OdError);
  CHECK_THROWS_AS(los_basis(0.1, -std::numbers::pi / 2 + 1e-13), OdError);
  try {
    los_basis(0.0, std::numbers::pi / 2);
  } catch (const OdError& e) {
    CHECK(e.kind() == ErrorKind::DegenerateGeometry);
  }
  CHECK_NOTHROW(los_basis(0.0, std::numbers::pi / 2 - 1e-6));
}

TEST_CASE("hat map") {
  const Mat3 z = hat({0, 0, 0});
  for (double x : z.m) CHECK(x == 0.0);

  const Vec3 w = hat({1, 0, 0}) * Vec3{0, 1, 0};
  CHECK(w == Vec3{0, 0, 1});

  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const Vec3 u = test::random_vec(rng), v = test::random_vec(rng);
    CHECK(norm(hat(u) * v - cross(u, v)) <= 1e-15 * norm(u) * norm(v));
    const Mat3 h = hat(u), ht = h.transposed();
    for (int i = 0; i < 9; ++i) CHECK(std::abs(h.m[i] + ht.m[i]) <= 1e-15);
  }
}

TEST_CASE("triple product") {
  const Vec3 e1{1, 0, 0}, e2{0, 1, 0}, e3{0, 0, 1};
  CHECK(triple(e1, e2, e3) == 1.0);
  CHECK(triple(e1, e1, e3) == 0.0);
  CHECK(triple(e2, e3, e2) == 0.0);

  std::mt19937_64 rng(5);
  for (int k = 0; k < 100; ++k) {
    const Vec3 a = test::random_vec(rng), b = test::random_vec(rng), c = test::random_vec(rng);
    Eigen::Matrix3d m;
    m << ev(a).transpose(), ev(b).transpose(), ev(c).transpose();
    const double det = m.determinant(), t = triple(a, b, c);
    CHECK(std::abs(t - det) <= 1e-13 * (1.0 + std::abs(det)));
    CHECK(std::abs(triple(b, c, a) - t) <= 1e-13 * (1.0 + std::abs(t)));
    CHECK(std::abs(triple(b, a, c) + t) <= 1e-13 * (1.0 + std::abs(t)));
    CHECK(std::abs(triple(c, b, a) + t) <= 1e-13 * (1.0 + std::abs(t)));
  }
}

TEST_CASE("Lagrange identity") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 1000; ++k) {
    const Vec3 a = test::random_vec(rng), b = test::random_vec(rng);
    const double lhs = norm2(cross(a, b));
    const double rhs = norm2(a) * norm2(b) - dot(a, b) * dot(a, b);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * norm2(a) * norm2(b));
  }
}

TEST_CASE("angle wrapping") {
  CHECK(wrap_pi(std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_pi(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
  CHECK(wrap_pi(0.1 - 2 * std::numbers::pi) == doctest::Approx(0.1));
  CHECK(wrap_two_pi(-0.1) == doctest::Approx(2 * std::numbers::pi - 0.1));
  CHECK(wrap_two_pi(7.0) == doctest::Approx(7.0 - 2 * std::numbers::pi));
}
