#include "doctest.h"

#include "kepod/errors.hpp"
#include "kepod/harness.hpp"
#include "kepod/polysystem.hpp"
#include "kepod/select.hpp"
#include "support.hpp"

using namespace kepod;

namespace {

std::vector<ODInput> generic_inputs(int n, std::uint64_t seed = 41) {
  HarnessConfig h;
  std::vector<ODInput> out;
  for (int k = 0; k < n; ++k) out.push_back(generate_case(h, seed, k).input);
  return out;
}

// Moves the first observation so that r1 lies on the second line of sight.
ODInput r1_on_second_los(ODInput in) {
  const Vec3 e2 = los_basis(in.a2.alpha, in.a2.delta).rho;
  const Vec3 r1 = in.obs2.q + 0.7 * e2;
  const Spherical s = to_spherical(r1 - in.obs1.q);
  in.p1.alpha = s.alpha;
  in.p1.delta = s.delta;
  in.p1.rho = s.rho;
  return in;
}

// Sum of |coefficient * t^i * rho^j| over a polynomial written as rows in t.
double term_scale(std::initializer_list<std::pair<int, std::vector<double>>> rows, double t, double rho) {
  double s = 0.0;
  for (const auto& [i, row] : rows) {
    double rk = 1.0;
    for (double c : row) {
      s += std::abs(c * std::pow(t, i)) * rk;
      rk *= std::abs(rho);
    }
  }
  return s;
}

}  // namespace

TEST_CASE("geometry: special configurations") {
  const ODInput deg = test::fixture("degenerate.json");
  const GeometrySet g = build_geometry(deg);
  CHECK(norm(g.D1) <= 1e-15 * norm(deg.obs1.q));

  ODInput in = test::fixture("noiseless.json");
  in.obs2.q = {0, 0, 0};
  in.obs2.qdot = {0, 0, 0};
  const GeometrySet h = build_geometry(in);
  CHECK(norm(h.G2) == 0.0);
  CHECK(norm(h.F2) == 0.0);
}

TEST_CASE("geometry reproduces the angular momenta") {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> n(0.0, 0.01);
  for (const ODInput& in : generic_inputs(10)) {
    const GeometrySet g = build_geometry(in);
    const LosBasis b1 = los_basis(in.p1.alpha, in.p1.delta), b2 = los_basis(in.a2.alpha, in.a2.delta);
    const Vec3 r1 = in.obs1.q + in.p1.rho * b1.rho;
    const Vec3 perp = in.a2.alphadot * std::cos(in.a2.delta) * b2.alpha + in.a2.deltadot * b2.delta;
    for (int k = 0; k < 5; ++k) {
      const double rhodot1 = n(rng), xi1 = n(rng), zeta1 = n(rng), rhodot2 = n(rng);
      const double rho2 = 0.2 + std::abs(100 * n(rng));
      const Vec3 v1 = in.obs1.qdot + rhodot1 * b1.rho + xi1 * b1.alpha + zeta1 * b1.delta;
      const Vec3 r2 = in.obs2.q + rho2 * b2.rho;
      const Vec3 v2 = in.obs2.qdot + rhodot2 * b2.rho + rho2 * perp;
      const Vec3 c1 = g.D1 * rhodot1 + g.N1 * xi1 + g.O1 * zeta1 + g.P1vec;
      const Vec3 c2 = g.D2 * rhodot2 + g.E2 * (rho2 * rho2) + g.F2 * rho2 + g.G2;
      CHECK(norm(c1 - cross(r1, v1)) <= 1e-12 * norm(r1) * norm(v1));
      CHECK(norm(c2 - cross(r2, v2)) <= 1e-12 * norm(r2) * norm(v2));
    }
  }
}

TEST_CASE("Q1 closed forms") {
  for (const ODInput& in : generic_inputs(20)) {
    const GeometrySet g = build_geometry(in);
    const EliminationCoeffs c = build_elimination(in, g);
    const auto s = assemble_states(in);
    const double r1d2 = dot(s.r1, g.D2);
    CHECK(test::rel(c.q1.c100, -dot(s.r1, s.basis1.delta) * r1d2) <= 1e-12);
    CHECK(test::rel(c.q1.c010, dot(s.r1, s.basis1.alpha) * r1d2) <= 1e-12);
    CHECK(test::rel(c.q1.c100, dot(g.N1, g.W12)) <= 1e-12);
    CHECK(test::rel(c.w2, norm2(g.W12)) <= 1e-15);
    CHECK_FALSE(c.degenerate());
  }
}

TEST_CASE("r1 . D2 = 0 makes both Q1 pivots vanish") {
  const ODInput in = r1_on_second_los(test::fixture("noiseless.json"));
  const GeometrySet g = build_geometry(in);
  const EliminationCoeffs c = build_elimination(in, g);
  CHECK(c.pivot_small);
  CHECK(c.degenerate());
  CHECK(std::abs(c.q1.c100) <= c.q_threshold);
  CHECK(std::abs(c.q1.c010) <= c.q_threshold);
  CHECK(c.degeneracy_reason().find("Q1_100") != std::string::npos);
  CHECK_THROWS_AS(eliminate_linear(c, 0.0, 1.0), OdError);
  CHECK_THROWS_AS(redundancy_check(in, g), OdError);
}

TEST_CASE("D1 = 0 puts r1 on the first line of sight") {
  const ODInput in = test::fixture("degenerate.json");
  const auto s = assemble_states(in);
  CHECK(std::abs(dot(s.r1, s.basis1.alpha)) <= 1e-15 * norm(s.r1));
  CHECK(std::abs(dot(s.r1, s.basis1.delta)) <= 1e-15 * norm(s.r1));
  const EliminationCoeffs c = build_elimination(in, build_geometry(in));
  CHECK(c.w12_small);
  CHECK(c.pivot_small);
  try {
    build_coefficients(in);
    FAIL("degenerate input accepted");
  } catch (const OdError& e) {
    CHECK(e.kind() == ErrorKind::DegenerateGeometry);
  }
}

TEST_CASE("linear elimination zeroes q1, q2, q3") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> t(-0.02, 0.02), r(0.05, 5.0);
  for (const ODInput& in : generic_inputs(20)) {
    const GeometrySet g = build_geometry(in);
    const EliminationCoeffs c = build_elimination(in, g);
    for (int k = 0; k < 10; ++k) {
      const double zeta1 = t(rng), rho2 = r(rng);
      const LinearSolution lin = eliminate_linear(c, zeta1, rho2);
      CHECK(lin.zeta1 == zeta1);
      const Unknowns u{lin.rhodot1, lin.xi1, lin.zeta1, rho2, lin.rhodot2, 0.0};
      const StatePair p = states_from_unknowns(in, u);
      const double cs = norm(cross(p.r1, p.v1)) + norm(cross(p.r2, p.v2));
      const auto q = generators(in, g, u);
      CHECK(std::abs(q[0]) <= 1e-10 * cs * norm(g.W12));
      CHECK(std::abs(q[1]) <= 1e-10 * cs * norm(g.D1) * norm(g.W12));
      CHECK(std::abs(q[2]) <= 1e-10 * cs * norm(g.D2) * norm(g.W12));

      // the mirror path recovers zeta1 from xi1
      const LinearSolution sw = eliminate_linear_swapped(c, lin.xi1, rho2);
      CHECK(std::abs(sw.zeta1 - zeta1) <= 1e-10 * (std::abs(zeta1) + std::abs(lin.xi1)));
      CHECK(std::abs(sw.rhodot1 - lin.rhodot1) <= 1e-10 * (1e-3 + std::abs(lin.rhodot1)));
      CHECK(std::abs(sw.rhodot2 - lin.rhodot2) <= 1e-10 * (1e-3 + std::abs(lin.rhodot2)));
    }
  }
}

TEST_CASE("linear elimination at the origin") {
  const ODInput in = test::fixture("noiseless.json");
  const EliminationCoeffs c = build_elimination(in, build_geometry(in));
  const LinearSolution lin = eliminate_linear(c, 0.0, 0.0);
  CHECK(lin.xi1 == doctest::Approx(-c.q1.c000 / c.q1.c100).epsilon(1e-15));
}

TEST_CASE("bivariate coefficients agree with direct generator evaluation") {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> t(-0.02, 0.02), r(0.05, 8.0);
  for (const ODInput& in : generic_inputs(20)) {
    const CoefficientSet cs = build_coefficients(in);
    const auto& p = cs.pair;
    for (int k = 0; k < 10; ++k) {
      const double tv = t(rng), rho = r(rng);
      const Unknowns u = unknowns_on_manifold(in, cs.elim, tv, rho);
      const auto q = generators(in, cs.geom, u);
      const double s5 = term_scale({{1, p.a1()}, {0, p.a0()}}, tv, rho);
      const double s6 = term_scale({{2, {p.p6_tt}}, {1, p.b1()}, {0, p.b0()}}, tv, rho);
      CHECK(std::abs(p.q5(tv, rho) - q[4]) <= 1e-9 * s5);
      CHECK(std::abs(p.p6(tv, rho) - q[5]) <= 1e-9 * s6);
      const StatePair sp = states_from_unknowns(in, u);
      CHECK(std::abs(q[6]) <= 1e-13 * (norm2(sp.v1) + norm2(sp.v2) + in.mu / norm(sp.r1)));
    }
  }
}

TEST_CASE("direct expansion matches production") {
  for (const ODInput& in : generic_inputs(20)) {
    const CoefficientSet cs = build_coefficients(in);
    const BivariatePair d = build_bivariate_direct(in, cs.geom, cs.elim);
    CHECK(d.off_support <= 1e-10);
    CHECK(cs.pair.off_support <= 1e-10);
    double m5 = 0.0, m6 = std::abs(cs.pair.p6_tt);
    for (double c : cs.pair.p5_t) m5 = std::max(m5, std::abs(c));
    for (double c : cs.pair.p5_0) m5 = std::max(m5, std::abs(c));
    for (double c : cs.pair.p6_t) m6 = std::max(m6, std::abs(c));
    for (double c : cs.pair.p6_0) m6 = std::max(m6, std::abs(c));
    for (int k = 0; k < 3; ++k) CHECK(std::abs(d.p5_t[k] - cs.pair.p5_t[k]) <= 1e-9 * m5);
    for (int k = 0; k < 5; ++k) CHECK(std::abs(d.p5_0[k] - cs.pair.p5_0[k]) <= 1e-9 * m5);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(d.p6_t[k] - cs.pair.p6_t[k]) <= 1e-9 * m6);
    for (int k = 0; k < 5; ++k) CHECK(std::abs(d.p6_0[k] - cs.pair.p6_0[k]) <= 1e-9 * m6);
    CHECK(std::abs(d.p6_tt - cs.pair.p6_tt) <= 1e-9 * m6);
  }
}

TEST_CASE("resultant has degree 8 on generic inputs") {
  int full = 0;
  const auto inputs = generic_inputs(40, 59);
  for (const ODInput& in : inputs) full += build_coefficients(in).v.degree() == 8;
  CHECK(full >= 38);
}

TEST_CASE("grouped form equals -a1^2 p6(-a0/a1)") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> r(0.02, 10.0), small(0.02, 2.0);
  for (const ODInput& in : generic_inputs(10)) {
    const CoefficientSet cs = build_coefficients(in);
    for (int k = 0; k < 20; ++k) {
      const double rho = r(rng);
      const double a1 = poly1::eval(cs.pair.a1(), rho), a0 = poly1::eval(cs.pair.a0(), rho);
      const double want = -a1 * a1 * cs.pair.p6(-a0 / a1, rho);
      double scale = 0.0;
      const double got = cs.v.eval_grouped(rho, nullptr, &scale).real();
      CHECK(std::abs(got - want) <= 1e-9 * scale);

      // the expanded coefficients carry the same polynomial near the origin
      const double x = small(rng);
      double vs = 0.0, xk = 1.0;
      for (double c : cs.v.v) {
        vs += std::abs(c) * xk;
        xk *= x;
      }
      CHECK(std::abs(cs.v.eval(x) - cs.v.eval_grouped(x).real()) <= 1e-9 * vs);
    }
  }
}

TEST_CASE("resultant of a pair with P20 = b0 = 0 is a1 a0 b1") {
  std::mt19937_64 rng(67);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  BivariatePair p;
  for (double& c : p.p5_t) c = u(rng);
  for (double& c : p.p5_0) c = u(rng);
  for (double& c : p.p6_t) c = u(rng);
  const ResultantPoly v = resultant(p);
  const auto want = poly1::mul(poly1::mul(p.a1(), p.a0()), p.b1());
  REQUIRE(want.size() == 9);
  for (int k = 0; k < 9; ++k) CHECK(v.v[k] == doctest::Approx(want[k]).epsilon(1e-14).scale(1.0));
}

TEST_CASE("roots scale with the unit of length") {
  const double s = 2.0;
  for (const ODInput& in : generic_inputs(10, 71)) {
    ODInput sc = in;
    sc.obs1.q = s * in.obs1.q;
    sc.obs1.qdot = s * in.obs1.qdot;
    sc.obs2.q = s * in.obs2.q;
    sc.obs2.qdot = s * in.obs2.qdot;
    sc.p1.rho = s * in.p1.rho;
    sc.mu = in.mu * s * s * s;
    const ResultantPoly a = build_coefficients(in).v, b = build_coefficients(sc).v;
    // v_b(s x) = kappa v_a(x) coefficientwise
    double kappa = 0.0;
    int lead = 0;
    for (int k = 0; k < 9; ++k)
      if (std::abs(a.v[k]) > std::abs(a.v[lead])) lead = k;
    kappa = b.v[lead] * std::pow(s, lead) / a.v[lead];
    for (int k = 0; k < 9; ++k) {
      const double bk = b.v[k] * std::pow(s, k);
      CHECK(std::abs(bk - kappa * a.v[k]) <= 1e-12 * std::abs(kappa) * a.max_abs());
    }
  }
}

TEST_CASE("redundancy of q4 given q5 and q6") {
  for (const ODInput& in : generic_inputs(20)) {
    const GeometrySet g = build_geometry(in);
    CHECK(redundancy_check(in, g) <= 1e-9);
  }
}

TEST_CASE("closed forms on the c1 = c2 manifold match the generators") {
  std::mt19937_64 rng(73);
  std::uniform_real_distribution<double> t(-0.02, 0.02), r(0.05, 5.0);
  for (const ODInput& in : generic_inputs(10)) {
    const CoefficientSet cs = build_coefficients(in);
    for (int k = 0; k < 10; ++k) {
      const Unknowns u = unknowns_on_manifold(in, cs.elim, t(rng), r(rng));
      const auto q = generators(in, cs.geom, u);
      const ClosedForms f = closed_forms(in, cs.geom, u);
      CHECK(test::rel(f.q4, q[3]) <= 1e-10);
      CHECK(test::rel(f.q5, q[4]) <= 1e-10);
      CHECK(test::rel(f.q6, q[5]) <= 1e-10);
    }
  }
}

TEST_CASE("r2 . D1 = 0 removes z2 from q4") {
  const ODInput in = test::fixture("noiseless.json");
  const GeometrySet g = build_geometry(in);
  const EliminationCoeffs c = build_elimination(in, g);
  const auto s = assemble_states(in);
  const double rho2 = -dot(in.obs2.q, g.D1) / dot(s.basis2.rho, g.D1);
  REQUIRE(rho2 > 0.0);
  Unknowns u = unknowns_on_manifold(in, c, 0.003, rho2);
  CHECK(std::abs(closed_forms(in, g, u).r2_dot_D1) <= 1e-14 * norm(g.D1) * rho2);
  const double q4 = generators(in, g, u)[3];
  u.z2 += 1.0;
  const double q4b = generators(in, g, u)[3];
  CHECK(std::abs(q4b - q4) <= 1e-13 * (std::abs(q4) + norm(g.D1)));
}
