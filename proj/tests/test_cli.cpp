#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"
#include "support.hpp"

using namespace kepod;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "kepod");
  std::ostringstream out, err;
  Run r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "kepod_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("solve on the noiseless fixture") {
  const Run r = run({"solve", "-i", test::fixture_path("noiseless.json")});
  REQUIRE(r.code == cli::kOk);
  const auto j = nlohmann::json::parse(r.out);
  int accepted = 0;
  for (const auto& c : j["candidates"]) accepted += c["flags"]["accepted"].get<bool>();
  CHECK(accepted == 1);
  CHECK(j["selection"]["chosen_index"] == 0);

  const Run again = run({"solve", "-i", test::fixture_path("noiseless.json")});
  CHECK(again.out == r.out);
}

TEST_CASE("solve with covariance") {
  const Run r = run({"solve", "-i", test::fixture_path("with_covariance.json")});
  REQUIRE(r.code == cli::kOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["selection"]["used_covariance"] == true);
}

TEST_CASE("degenerate input exits 2") {
  const Run r = run({"solve", "-i", test::fixture_path("degenerate.json")});
  CHECK(r.code == cli::kNoSolution);
  CHECK(r.err.find("DegenerateGeometry") != std::string::npos);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["error"]["kind"] == "DegenerateGeometry");
}

TEST_CASE("oracle-check passes") {
  const Run r = run({"oracle-check", "-i", test::fixture_path("noiseless.json"), "--scan-n", "2000"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(r.out.find("PASS") != std::string::npos);
}

TEST_CASE("coefficient dump parses") {
  const Run r = run({"solve", "-i", test::fixture_path("noiseless.json"), "--dump-coeffs"});
  REQUIRE(r.code == cli::kOk);
  const auto j = nlohmann::json::parse(r.out);
  REQUIRE(j.contains("coefficients"));
  CHECK(j["coefficients"]["v"].size() == 9);
}

TEST_CASE("usage errors exit 1") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"solve"}).code == cli::kUsage);
  CHECK(run({"solve", "-i", "/nonexistent/input.json"}).code == cli::kUsage);
  CHECK(run({"solve", "-i", test::fixture_path("noiseless.json"), "--metric", "nope"}).code == cli::kUsage);
  CHECK(run({"frobnicate"}).code == cli::kUsage);
  CHECK(run({"--help"}).code == cli::kOk);
}

TEST_CASE("generate, batch and stats") {
  const fs::path in = temp_file("gen.csv"), recs = temp_file("recs.csv");
  REQUIRE(run({"generate", "--count", "5", "--seed", "9", "-o", in.string()}).code == cli::kOk);
  const Run s = run({"solve", "-i", in.string()});
  CHECK(s.code == cli::kOk);
  CHECK(nlohmann::json::parse(s.out).size() == 5);

  REQUIRE(run({"batch", "-n", "20", "--seed", "9", "-o", recs.string()}).code == cli::kOk);
  const Run st = run({"stats", "-i", recs.string(), "--column", "de", "--bins", "4"});
  REQUIRE(st.code == cli::kOk);
  CHECK(st.out.rfind("column,bin,lo,hi,count", 0) == 0);
  const Run sum = run({"stats", "-i", recs.string(), "--summary"});
  CHECK(sum.code == cli::kOk);
  CHECK(sum.out.find("delta_traj") != std::string::npos);
}

TEST_CASE("environment supplies mu and c when the input omits them") {
  auto j = nlohmann::json::parse(std::ifstream(test::fixture_path("noiseless.json")));
  j.erase("mu");
  j.erase("c");
  const fs::path p = temp_file("no_constants.json");
  std::ofstream(p) << j.dump();

  ::setenv("KEPOD_C", "0", 1);
  const Run plain = run({"solve", "-i", p.string()});
  ::setenv("KEPOD_C", "173.144632674", 1);
  const Run light = run({"solve", "-i", p.string()});
  ::setenv("KEPOD_C", "-1", 1);
  const Run bad = run({"solve", "-i", p.string()});
  ::unsetenv("KEPOD_C");
  REQUIRE(plain.code == cli::kOk);
  REQUIRE(light.code == cli::kOk);
  CHECK(bad.code == cli::kUsage);
  const auto a = nlohmann::json::parse(plain.out), b = nlohmann::json::parse(light.out);
  CHECK(a["candidates"][0]["t1_tilde"] == j["t1"]);
  CHECK(b["candidates"][0]["t1_tilde"].get<double>() < j["t1"].get<double>());
  CHECK(a["input_hash"] != b["input_hash"]);

  // explicit values win over the environment
  ::setenv("KEPOD_C", "173.144632674", 1);
  const Run fixed = run({"solve", "-i", test::fixture_path("noiseless.json")});
  ::unsetenv("KEPOD_C");
  CHECK(fixed.out == run({"solve", "-i", test::fixture_path("noiseless.json")}).out);
}
