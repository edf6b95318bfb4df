#include "kepod/report.hpp"

#include <limits>

#include "kepod/errors.hpp"

namespace kepod {

namespace {

using nlohmann::json;

// NaN and infinities dump as null; read them back as NaN.
double num(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

json vec(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec(const json& j) {
  if (!j.is_array() || j.size() != 3) throw OdError(ErrorKind::ParseError, "expected a 3-vector");
  return {num(j[0]), num(j[1]), num(j[2])};
}

template <typename C>
json list(const C& c) {
  json out = json::array();
  for (double x : c) out.push_back(x);
  return out;
}

template <std::size_t N>
std::array<double, N> fixed(const json& j, const char* what) {
  if (!j.is_array() || j.size() != N) {
    throw OdError(ErrorKind::ParseError, std::string(what) + " has the wrong length");
  }
  std::array<double, N> out{};
  for (std::size_t k = 0; k < N; ++k) out[k] = num(j[k]);
  return out;
}

json row(const QRow& q) {
  return {{"c100", q.c100}, {"c010", q.c010}, {"c002", q.c002}, {"c001", q.c001}, {"c000", q.c000}};
}

QRow row(const json& j) {
  QRow q;
  q.c100 = num(j.at("c100"));
  q.c010 = num(j.at("c010"));
  q.c002 = num(j.at("c002"));
  q.c001 = num(j.at("c001"));
  q.c000 = num(j.at("c000"));
  return q;
}

std::string name(FreeVariable f) { return f == FreeVariable::Zeta1 ? "zeta1" : "xi1"; }

FreeVariable free_from(const json& j) {
  const auto s = j.get<std::string>();
  if (s == "zeta1") return FreeVariable::Zeta1;
  if (s == "xi1") return FreeVariable::Xi1;
  throw OdError(ErrorKind::ParseError, "unknown free variable '" + s + "'");
}

}  // namespace

json to_json(const Unknowns& u) {
  return {{"rhodot1", u.rhodot1}, {"xi1", u.xi1},         {"zeta1", u.zeta1},
          {"rho2", u.rho2},       {"rhodot2", u.rhodot2}, {"z2", u.z2}};
}

json to_json(const KeplerianElements& el) {
  return {{"a", el.a},         {"e", el.e},   {"i", el.i},         {"Omega", el.Omega},
          {"omega", el.omega}, {"ell", el.ell}, {"epoch", el.epoch}, {"mu", el.mu}};
}

json to_json(const SolverConfig& c) {
  return {{"tol_im", c.roots.tol_im},
          {"tol_dup", c.roots.tol_dup},
          {"trim_rel", c.roots.trim_rel},
          {"tol_accept", c.tol_accept},
          {"tol_elem", c.tol_elem},
          {"pivot_eps", c.pivot_eps},
          {"cluster_rel", c.cluster_rel}};
}

json coefficients_to_json(const CoefficientSet& cs) {
  const auto& g = cs.geom;
  const auto& e = cs.elim;
  const auto& p = cs.pair;
  json out;
  out["geometry"] = {{"D1", vec(g.D1)}, {"D2", vec(g.D2)}, {"W12", vec(g.W12)},
                     {"N1", vec(g.N1)}, {"O1", vec(g.O1)}, {"P1", vec(g.P1vec)},
                     {"E2", vec(g.E2)}, {"F2", vec(g.F2)}, {"G2", vec(g.G2)}};
  out["Q"] = {{"q1", row(e.q1)},
              {"q2", row(e.q2)},
              {"q3", row(e.q3)},
              {"w2", e.w2},
              {"w_threshold", e.w_threshold},
              {"q_threshold", e.q_threshold},
              {"w12_small", e.w12_small},
              {"pivot_small", e.pivot_small},
              {"free", name(e.free)}};
  out["P5"] = {{"t", list(p.p5_t)}, {"const", list(p.p5_0)}};
  out["P6"] = {{"tt", p.p6_tt}, {"t", list(p.p6_t)}, {"const", list(p.p6_0)}};
  out["free"] = name(p.free);
  out["off_support"] = p.off_support;
  out["v"] = list(cs.v.v);
  return out;
}

CoefficientSet coefficients_from_json(const json& j) {
  CoefficientSet cs;
  try {
    const auto& g = j.at("geometry");
    cs.geom.D1 = vec(g.at("D1"));
    cs.geom.D2 = vec(g.at("D2"));
    cs.geom.W12 = vec(g.at("W12"));
    cs.geom.N1 = vec(g.at("N1"));
    cs.geom.O1 = vec(g.at("O1"));
    cs.geom.P1vec = vec(g.at("P1"));
    cs.geom.E2 = vec(g.at("E2"));
    cs.geom.F2 = vec(g.at("F2"));
    cs.geom.G2 = vec(g.at("G2"));

    const auto& q = j.at("Q");
    cs.elim.q1 = row(q.at("q1"));
    cs.elim.q2 = row(q.at("q2"));
    cs.elim.q3 = row(q.at("q3"));
    cs.elim.w2 = num(q.at("w2"));
    cs.elim.w_threshold = num(q.at("w_threshold"));
    cs.elim.q_threshold = num(q.at("q_threshold"));
    cs.elim.w12_small = q.at("w12_small").get<bool>();
    cs.elim.pivot_small = q.at("pivot_small").get<bool>();
    cs.elim.free = free_from(q.at("free"));

    cs.pair.free = free_from(j.at("free"));
    cs.pair.p5_t = fixed<3>(j.at("P5").at("t"), "P5.t");
    cs.pair.p5_0 = fixed<5>(j.at("P5").at("const"), "P5.const");
    cs.pair.p6_tt = num(j.at("P6").at("tt"));
    cs.pair.p6_t = fixed<3>(j.at("P6").at("t"), "P6.t");
    cs.pair.p6_0 = fixed<5>(j.at("P6").at("const"), "P6.const");
    cs.pair.off_support = num(j.at("off_support"));

    cs.v = resultant(cs.pair);
    cs.v.v = fixed<9>(j.at("v"), "v");
  } catch (const nlohmann::json::exception& ex) {
    throw OdError(ErrorKind::ParseError, std::string("coefficient dump: ") + ex.what());
  }
  return cs;
}

CoefficientSet parse_coefficients(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& ex) {
    throw OdError(ErrorKind::ParseError, ex.what());
  }
  if (j.contains("coefficients")) return coefficients_from_json(j.at("coefficients"));
  return coefficients_from_json(j);
}

json candidate_to_json(const CandidateSolution& c, const std::string& input_hash,
                       const SolverConfig& config) {
  json out;
  out["input_hash"] = input_hash;
  out["unknowns"] = to_json(c.unknowns);
  out["residuals"] = list(c.residuals);
  out["residual_full"] = c.residual_full;
  out["flags"] = {{"real", c.flags.real},
                  {"rho2_pos", c.flags.rho2_pos},
                  {"z2_pos", c.flags.z2_pos},
                  {"accepted", c.flags.accepted}};
  out["t1_tilde"] = c.t1_tilde;
  out["t2_tilde"] = c.t2_tilde;
  out["elements1"] = c.elements1 ? to_json(*c.elements1) : json(nullptr);
  out["elements2"] = c.elements2 ? to_json(*c.elements2) : json(nullptr);
  out["element_gap"] = c.element_gap;
  out["diagnostic"] = c.diagnostic;
  out["tolerances"] = to_json(config);
  return out;
}

json selection_to_json(const SelectionReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"index", e.index},
                       {"accepted", e.accepted},
                       {"alpha", e.rho_hat.alpha},
                       {"delta", e.rho_hat.delta},
                       {"rho", e.rho_hat.rho},
                       {"distance", e.distance},
                       {"chi3", e.chi3 ? json(*e.chi3) : json(nullptr)},
                       {"diagnostic", e.diagnostic}});
  }
  json kept = json::array();
  for (auto k : r.kept) kept.push_back(k);
  return {{"metric", to_string(r.metric)},
          {"used_covariance", r.used_covariance},
          {"chi3_threshold", r.chi3_threshold ? json(*r.chi3_threshold) : json(nullptr)},
          {"chosen_index", r.chosen_index},
          {"kept", kept},
          {"entries", entries}};
}

json solve_report(const ODInput& input, const SolveResult& result, const SolverConfig& config,
                  const SelectionReport* selection, const ReportOptions& options) {
  const auto hash = input_hash(input);
  json out;
  out["input_hash"] = hash;
  out["tolerances"] = to_json(config);
  out["real_roots"] = list(result.roots.real_roots);
  json cands = json::array();
  for (const auto& c : result.candidates) cands.push_back(candidate_to_json(c, hash, config));
  out["candidates"] = cands;
  out["selection"] = selection ? selection_to_json(*selection) : json(nullptr);
  if (options.dump_coeffs) out["coefficients"] = coefficients_to_json(result.coefficients);
  return out;
}

}  // namespace kepod
