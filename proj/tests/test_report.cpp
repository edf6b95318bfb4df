#include "doctest.h"

#include "kepod/errors.hpp"
#include "kepod/report.hpp"
#include "support.hpp"

using namespace kepod;

TEST_CASE("coefficient dump round trip") {
  const ODInput in = test::fixture("with_covariance.json");
  const SolveResult r = solve_detailed(in);
  const nlohmann::json full = solve_report(in, r, SolverConfig{}, nullptr, {.dump_coeffs = true});
  REQUIRE(full.contains("coefficients"));
  const CoefficientSet back = parse_coefficients(full.dump());
  const CoefficientSet& cs = r.coefficients;
  CHECK(back.v.v == cs.v.v);
  CHECK(back.pair.p5_t == cs.pair.p5_t);
  CHECK(back.pair.p5_0 == cs.pair.p5_0);
  CHECK(back.pair.p6_t == cs.pair.p6_t);
  CHECK(back.pair.p6_0 == cs.pair.p6_0);
  CHECK(back.pair.p6_tt == cs.pair.p6_tt);
  CHECK(back.elim.q1.c100 == cs.elim.q1.c100);
  CHECK(back.elim.q3.c000 == cs.elim.q3.c000);
  CHECK(back.elim.free == cs.elim.free);
  CHECK(back.geom.W12 == cs.geom.W12);
  CHECK(back.v.a1 == cs.v.a1);
  CHECK(back.v.p20 == cs.v.p20);

  // the bare object parses too, and roots from it match
  const CoefficientSet bare = parse_coefficients(full["coefficients"].dump());
  CHECK(bare.v.v == cs.v.v);
  CHECK(all_roots(bare.v).real_roots == r.roots.real_roots);
}

TEST_CASE("coefficient parse errors") {
  for (const char* text : {"", "[1,2]", "{\"coefficients\": {\"v\": [1]}}"}) {
    try {
      parse_coefficients(text);
      FAIL("accepted: " << text);
    } catch (const OdError& e) {
      CHECK(e.kind() == ErrorKind::ParseError);
    }
  }
}

TEST_CASE("solve report layout") {
  const ODInput in = test::fixture("noiseless.json");
  const SolveResult r = solve_detailed(in);
  const SelectionReport sel = select_no_cov(in, r.candidates);
  const nlohmann::json j = solve_report(in, r, SolverConfig{}, &sel);
  CHECK(j["input_hash"] == input_hash(in));
  CHECK(j["tolerances"]["tol_accept"] == 1e-6);
  CHECK(j["real_roots"].size() == r.roots.real_roots.size());
  REQUIRE(j["candidates"].size() == 2);
  CHECK(j["candidates"][0]["flags"]["accepted"] == true);
  CHECK(j["candidates"][0]["unknowns"]["rho2"] == r.candidates[0].unknowns.rho2);
  CHECK(j["selection"]["chosen_index"] == sel.chosen_index);
  CHECK_FALSE(j.contains("coefficients"));
  const nlohmann::json none = solve_report(in, r, SolverConfig{}, nullptr);
  CHECK(none["selection"].is_null());
}
