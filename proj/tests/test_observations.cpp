#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "json.hpp"

#include "kepod/errors.hpp"
#include "kepod/harness.hpp"
#include "kepod/observations.hpp"
#include "support.hpp"

using namespace kepod;

namespace {

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

void check_identical(const ODInput& a, const ODInput& b) {
  const double x[] = {a.p1.alpha, a.p1.delta, a.p1.rho, a.p1.epoch, a.a2.alpha, a.a2.delta,
                      a.a2.alphadot, a.a2.deltadot, a.a2.epoch, a.mu, a.c_light,
                      a.obs1.q.x, a.obs1.q.y, a.obs1.q.z, a.obs1.qdot.x, a.obs1.qdot.y, a.obs1.qdot.z,
                      a.obs2.q.x, a.obs2.q.y, a.obs2.q.z, a.obs2.qdot.x, a.obs2.qdot.y, a.obs2.qdot.z,
                      a.obs1.epoch, a.obs2.epoch};
  const double y[] = {b.p1.alpha, b.p1.delta, b.p1.rho, b.p1.epoch, b.a2.alpha, b.a2.delta,
                      b.a2.alphadot, b.a2.deltadot, b.a2.epoch, b.mu, b.c_light,
                      b.obs1.q.x, b.obs1.q.y, b.obs1.q.z, b.obs1.qdot.x, b.obs1.qdot.y, b.obs1.qdot.z,
                      b.obs2.q.x, b.obs2.q.y, b.obs2.q.z, b.obs2.qdot.x, b.obs2.qdot.y, b.obs2.qdot.z,
                      b.obs1.epoch, b.obs2.epoch};
  for (std::size_t k = 0; k < std::size(x); ++k) CHECK(bit_equal(x[k], y[k]));
  REQUIRE(a.gamma_d.has_value() == b.gamma_d.has_value());
  if (a.gamma_d) {
    for (int r = 0; r < 7; ++r)
      for (int c = 0; c < 7; ++c) CHECK(bit_equal((*a.gamma_d)(r, c), (*b.gamma_d)(r, c)));
  }
}

nlohmann::json minimal_record() {
  return {{"units", "rad"},
          {"t1", 0.0},
          {"alpha1", 0.1},
          {"delta1", 0.2},
          {"rho1", 1.0},
          {"t2bar", 10.0},
          {"alpha2", 0.3},
          {"delta2", 0.1},
          {"alphadot2", 0.01},
          {"deltadot2", -0.002},
          {"obs1", {{"q", {1.0, 0.0, 0.0}}, {"qdot", {0.0, 0.0172, 0.0}}}},
          {"obs2", {{"q", {0.98, 0.17, 0.0}}, {"qdot", {-0.003, 0.017, 0.0}}}}};
}

}  // namespace

TEST_CASE("JSON round trip is bit exact") {
  for (const char* name : {"noiseless.json", "with_covariance.json"}) {
    const ODInput in = test::fixture(name);
    check_identical(in, parse_input_json(to_json_string(in)));

    const auto tmp = std::filesystem::temp_directory_path() / "kepod_roundtrip.json";
    save_input(in, tmp);
    check_identical(in, load_input(tmp, InputFormat::Json));
    std::filesystem::remove(tmp);
  }
}

TEST_CASE("CSV round trip is bit exact") {
  const std::vector<ODInput> ins = {test::fixture("noiseless.json"), test::fixture("degenerate.json")};
  const auto back = parse_input_csv(to_csv(ins));
  REQUIRE(back.size() == 2);
  check_identical(ins[0], back[0]);
  check_identical(ins[1], back[1]);

  const std::vector<ODInput> cov = {test::fixture("with_covariance.json")};
  check_identical(cov[0], parse_input_csv(to_csv(cov)).at(0));
}

TEST_CASE("validation") {
  auto j = minimal_record();
  CHECK_NOTHROW(parse_input_json(j.dump()));

  j["rho1"] = -1.0;
  try {
    parse_input_json(j.dump());
    FAIL("rho1 = -1 accepted");
  } catch (const OdError& e) {
    CHECK(e.kind() == ErrorKind::ValidationError);
  }

  j = minimal_record();
  j["delta2"] = 2.0;
  CHECK_THROWS_AS(parse_input_json(j.dump()), OdError);

  j = minimal_record();
  j["gamma_p1"] = {{1e-10, 0, 0}, {0, 1e-10, 0}, {0, 0, 1e-12}};
  CHECK_THROWS_AS(parse_input_json(j.dump()), OdError);  // gamma_a2 missing

  j["gamma_a2"] = {{1, 0, 0, 0}, {0, -1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};
  CHECK_THROWS_AS(parse_input_json(j.dump()), OdError);  // not PSD
}

TEST_CASE("parse errors") {
  try {
    parse_input_json("{not json");
    FAIL("accepted");
  } catch (const OdError& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
  }
  auto j = minimal_record();
  j.erase("alpha2");
  CHECK_THROWS_AS(parse_input_json(j.dump()), OdError);
  j = minimal_record();
  j["units"] = "grad";
  CHECK_THROWS_AS(parse_input_json(j.dump()), OdError);
  CHECK_THROWS_AS(parse_input_csv(""), OdError);
}

TEST_CASE("missing covariance leaves gamma_d empty") {
  const ODInput in = parse_input_json(minimal_record().dump());
  CHECK_FALSE(in.gamma_d.has_value());
  CHECK(test::fixture("with_covariance.json").gamma_d.has_value());
}

TEST_CASE("degree units are converted, rates per day included") {
  auto j = minimal_record();
  j["units"] = "deg";
  j["alpha1"] = 90.0;
  j["alphadot2"] = 1.0;
  j["gamma_p1"] = {{1.0, 0, 0}, {0, 1.0, 0}, {0, 0, 1e-12}};
  j["gamma_a2"] = {{1.0, 0, 0, 0}, {0, 1.0, 0, 0}, {0, 0, 1.0, 0}, {0, 0, 0, 1.0}};
  const ODInput in = parse_input_json(j.dump());
  const double deg = std::numbers::pi / 180.0;
  CHECK(in.p1.alpha == doctest::Approx(std::numbers::pi / 2));
  CHECK(in.a2.alphadot == doctest::Approx(deg));
  CHECK((*in.gamma_d)(0, 0) == doctest::Approx(deg * deg));
  CHECK((*in.gamma_d)(2, 2) == 1e-12);  // rho1 is not an angle
  CHECK(in.p1.rho == 1.0);
}

TEST_CASE("defaults for mu and c apply only when absent") {
  auto j = minimal_record();
  InputDefaults d;
  d.mu = 1e-9;
  d.c_light = 0.0;
  ODInput in = parse_input_json(j.dump(), d);
  CHECK(in.mu == 1e-9);
  CHECK(in.c_light == 0.0);
  in = parse_input_json(j.dump());
  CHECK(in.mu == kGaussMu);
  CHECK(in.c_light == kLightSpeed);
  j["mu"] = 2e-4;
  CHECK(parse_input_json(j.dump(), d).mu == 2e-4);
}

TEST_CASE("assemble_states") {
  ODInput in = parse_input_json(minimal_record().dump());
  in.obs1.q = {0, 0, 0};
  in.p1.alpha = 0.0;
  in.p1.delta = 0.0;
  in.p1.rho = 1.0;
  Vec3 r1 = assemble_states(in).r1;
  CHECK(norm(r1 - Vec3{1, 0, 0}) < 1e-16);

  in.obs1.q = {1, 0, 0};
  in.p1.alpha = std::numbers::pi / 2;
  r1 = assemble_states(in).r1;
  CHECK(norm(r1 - Vec3{1, 1, 0}) < 1e-15);

  const ODInput f = test::fixture("noiseless.json");
  const auto s = assemble_states(f);
  CHECK(std::abs(norm(s.r1 - f.obs1.q) - f.p1.rho) <= 1e-13 * f.p1.rho);
  const Vec3 perp = f.a2.alphadot * std::cos(f.a2.delta) * s.basis2.alpha + f.a2.deltadot * s.basis2.delta;
  CHECK(norm(s.e_perp2 - perp) <= 1e-15 * norm(perp));
}

TEST_CASE("assembled r1 matches the generator's truth") {
  HarnessConfig h;
  for (std::uint64_t k = 0; k < 20; ++k) {
    const SyntheticCase sc = generate_case(h, 5, k);
    const Vec3 r1 = assemble_states(sc.input).r1;
    CHECK(norm(r1 - sc.truth1.r) <= 1e-14 * norm(sc.truth1.r));
  }
}

TEST_CASE("input hash") {
  const ODInput a = test::fixture("noiseless.json");
  ODInput b = a;
  CHECK(input_hash(a) == input_hash(b));
  CHECK(input_hash(a).size() == 16);
  b.p1.rho = std::nextafter(b.p1.rho, 2.0);
  CHECK(input_hash(a) != input_hash(b));
}

TEST_CASE("JSON files may hold an array of records") {
  const ODInput a = test::fixture("noiseless.json"), b = test::fixture("with_covariance.json");
  const auto path = std::filesystem::temp_directory_path() / "kepod_array.json";
  std::ofstream(path) << "[" << to_json_string(a) << "," << to_json_string(b) << "]";
  const auto all = load_inputs(path, InputFormat::Json);
  REQUIRE(all.size() == 2);
  CHECK(to_json_string(all[0]) == to_json_string(a));
  CHECK(to_json_string(all[1]) == to_json_string(b));
  CHECK(to_json_string(load_input(path, InputFormat::Json)) == to_json_string(a));
  std::filesystem::remove(path);
}
