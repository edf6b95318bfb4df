#include "kepod/observations.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "kepod/errors.hpp"

namespace kepod {

namespace {

using nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180.0;

// Which of the seven data components are angles (and scale with units).
constexpr std::array<bool, 7> kAngular = {true, true, false, true, true, true, true};

double angle_scale(const std::string& units) {
  if (units == "rad") return 1.0;
  if (units == "deg") return kDeg;
  throw OdError(ErrorKind::ParseError, "unknown units '" + units + "' (expected deg or rad)");
}

Vec3 vec_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw OdError(ErrorKind::ParseError, std::string(what) + " must be a 3-element array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec_to(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

double number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number()) {
    throw OdError(ErrorKind::ParseError, std::string("missing numeric field '") + key + "'");
  }
  return j.at(key).get<double>();
}

template <int N>
Eigen::Matrix<double, N, N> matrix_from(const json& j, const char* what) {
  Eigen::Matrix<double, N, N> m;
  if (!j.is_array() || j.size() != N) {
    throw OdError(ErrorKind::ParseError, std::string(what) + " has the wrong shape");
  }
  for (int r = 0; r < N; ++r) {
    if (!j[r].is_array() || j[r].size() != N) {
      throw OdError(ErrorKind::ParseError, std::string(what) + " has the wrong shape");
    }
    for (int c = 0; c < N; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

template <typename M>
json matrix_to(const M& m) {
  json out = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

ODInput from_json(const json& j, const InputDefaults& defaults) {
  const std::string units = j.value("units", std::string("rad"));
  const double s = angle_scale(units);
  ODInput in;
  in.mu = defaults.mu;
  in.c_light = defaults.c_light;
  in.p1.epoch = number(j, "t1");
  in.p1.alpha = number(j, "alpha1") * s;
  in.p1.delta = number(j, "delta1") * s;
  in.p1.rho = number(j, "rho1");
  in.a2.epoch = number(j, "t2bar");
  in.a2.alpha = number(j, "alpha2") * s;
  in.a2.delta = number(j, "delta2") * s;
  in.a2.alphadot = number(j, "alphadot2") * s;
  in.a2.deltadot = number(j, "deltadot2") * s;
  for (auto [key, obs, t] : {std::tuple{"obs1", &in.obs1, in.p1.epoch},
                             std::tuple{"obs2", &in.obs2, in.a2.epoch}}) {
    if (!j.contains(key)) throw OdError(ErrorKind::ParseError, std::string("missing ") + key);
    const json& o = j.at(key);
    obs->q = vec_from(o.at("q"), "q");
    obs->qdot = vec_from(o.at("qdot"), "qdot");
    obs->epoch = o.contains("epoch") ? o.at("epoch").get<double>() : t;
  }
  if (j.contains("mu")) in.mu = j.at("mu").get<double>();
  if (j.contains("c")) in.c_light = j.at("c").get<double>();

  const bool has_p = j.contains("gamma_p1"), has_a = j.contains("gamma_a2");
  if (has_p != has_a) {
    throw OdError(ErrorKind::ValidationError, "gamma_p1 and gamma_a2 must be given together");
  }
  if (has_p) {
    Cov7 g = Cov7::Zero();
    g.topLeftCorner<3, 3>() = matrix_from<3>(j.at("gamma_p1"), "gamma_p1");
    g.bottomRightCorner<4, 4>() = matrix_from<4>(j.at("gamma_a2"), "gamma_a2");
    for (int r = 0; r < 7; ++r)
      for (int c = 0; c < 7; ++c) {
        if (kAngular[r]) g(r, c) *= s;
        if (kAngular[c]) g(r, c) *= s;
      }
    in.gamma_d = g;
  }
  validate(in);
  return in;
}

json to_json(const ODInput& in) {
  json j;
  j["units"] = "rad";
  j["t1"] = in.p1.epoch;
  j["alpha1"] = in.p1.alpha;
  j["delta1"] = in.p1.delta;
  j["rho1"] = in.p1.rho;
  j["t2bar"] = in.a2.epoch;
  j["alpha2"] = in.a2.alpha;
  j["delta2"] = in.a2.delta;
  j["alphadot2"] = in.a2.alphadot;
  j["deltadot2"] = in.a2.deltadot;
  j["obs1"] = {{"q", vec_to(in.obs1.q)}, {"qdot", vec_to(in.obs1.qdot)}, {"epoch", in.obs1.epoch}};
  j["obs2"] = {{"q", vec_to(in.obs2.q)}, {"qdot", vec_to(in.obs2.qdot)}, {"epoch", in.obs2.epoch}};
  j["mu"] = in.mu;
  j["c"] = in.c_light;
  if (in.gamma_d) {
    j["gamma_p1"] = matrix_to(Eigen::Matrix3d(in.gamma_d->topLeftCorner<3, 3>()));
    j["gamma_a2"] = matrix_to(Eigen::Matrix4d(in.gamma_d->bottomRightCorner<4, 4>()));
  }
  return j;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw OdError(ErrorKind::ParseError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Column layout shared by the CSV reader and writer.
std::vector<std::string> csv_scalar_columns() {
  return {"units", "t1", "alpha1", "delta1", "rho1", "t2bar", "alpha2", "delta2",
          "alphadot2", "deltadot2", "obs1_qx", "obs1_qy", "obs1_qz", "obs1_qdotx",
          "obs1_qdoty", "obs1_qdotz", "obs2_qx", "obs2_qy", "obs2_qz", "obs2_qdotx",
          "obs2_qdoty", "obs2_qdotz", "mu", "c"};
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& column) {
  double v = 0.0;
  const char* first = s.data();
  while (*first == ' ') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc{} || ptr == first) {
    throw OdError(ErrorKind::ParseError, "bad number '" + s + "' in column " + column);
  }
  return v;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void validate(const ODInput& in) {
  auto fail = [](const std::string& msg) { throw OdError(ErrorKind::ValidationError, msg); };
  const double values[] = {in.p1.alpha, in.p1.delta, in.p1.rho, in.p1.epoch, in.a2.alpha,
                           in.a2.delta, in.a2.alphadot, in.a2.deltadot, in.a2.epoch, in.mu};
  for (double v : values)
    if (!std::isfinite(v)) fail("non-finite input value");
  if (!(in.p1.rho > 0.0)) fail("rho1 must be positive");
  if (!(std::abs(in.p1.delta) < std::numbers::pi / 2)) fail("|delta1| must be below pi/2");
  if (!(std::abs(in.a2.delta) < std::numbers::pi / 2)) fail("|delta2| must be below pi/2");
  if (!(in.mu > 0.0)) fail("mu must be positive");
  if (!(in.c_light >= 0.0)) fail("c must be non-negative (0 disables light time)");
  for (const auto* o : {&in.obs1, &in.obs2})
    for (int k = 0; k < 3; ++k)
      if (!std::isfinite(o->q[k]) || !std::isfinite(o->qdot[k])) fail("non-finite observer state");
  if (in.gamma_d) {
    const Cov7& g = *in.gamma_d;
    if (!g.allFinite()) fail("non-finite covariance");
    const double tol = 1e-12 * std::max(g.cwiseAbs().maxCoeff(), 1e-300);
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > tol) fail("covariance is not symmetric");
    if (g.topRightCorner<3, 4>().cwiseAbs().maxCoeff() > 0.0 ||
        g.bottomLeftCorner<4, 3>().cwiseAbs().maxCoeff() > 0.0) {
      fail("covariance must be block diagonal (P1 and A2 independent)");
    }
    Eigen::SelfAdjointEigenSolver<Cov7> es(g, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * g.trace()) fail("covariance is not PSD");
  }
}

ODInput parse_input_json(const std::string& text, const InputDefaults& defaults) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw OdError(ErrorKind::ParseError, e.what());
  }
  try {
    return from_json(j, defaults);
  } catch (const json::exception& e) {
    throw OdError(ErrorKind::ParseError, e.what());
  }
}

std::string to_json_string(const ODInput& input, int indent) { return to_json(input).dump(indent); }

std::vector<ODInput> parse_input_csv(const std::string& text, const InputDefaults& defaults) {
  std::istringstream ss(text);
  std::string line;
  if (!std::getline(ss, line)) throw OdError(ErrorKind::ParseError, "empty CSV");
  const auto header = split(line, ',');
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;

  std::vector<ODInput> out;
  while (std::getline(ss, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw OdError(ErrorKind::ParseError, "CSV row has " + std::to_string(cells.size()) +
                                               " cells, header has " +
                                               std::to_string(header.size()));
    }
    auto get = [&](const std::string& name) -> double {
      auto it = col.find(name);
      if (it == col.end()) throw OdError(ErrorKind::ParseError, "missing CSV column " + name);
      return parse_double(cells[it->second], name);
    };
    json j;
    j["units"] = col.contains("units") ? cells[col["units"]] : std::string("rad");
    for (const char* k : {"t1", "alpha1", "delta1", "rho1", "t2bar", "alpha2", "delta2",
                          "alphadot2", "deltadot2"})
      j[k] = get(k);
    for (const char* o : {"obs1", "obs2"}) {
      const std::string p = o;
      j[o]["q"] = {get(p + "_qx"), get(p + "_qy"), get(p + "_qz")};
      j[o]["qdot"] = {get(p + "_qdotx"), get(p + "_qdoty"), get(p + "_qdotz")};
    }
    if (col.contains("mu")) j["mu"] = get("mu");
    if (col.contains("c")) j["c"] = get("c");
    if (col.contains("gamma_p1_00")) {
      json gp = json::array(), ga = json::array();
      for (int r = 0; r < 3; ++r) {
        json row = json::array();
        for (int c = 0; c < 3; ++c) row.push_back(get("gamma_p1_" + std::to_string(r) + std::to_string(c)));
        gp.push_back(row);
      }
      for (int r = 0; r < 4; ++r) {
        json row = json::array();
        for (int c = 0; c < 4; ++c) row.push_back(get("gamma_a2_" + std::to_string(r) + std::to_string(c)));
        ga.push_back(row);
      }
      j["gamma_p1"] = gp;
      j["gamma_a2"] = ga;
    }
    out.push_back(from_json(j, defaults));
  }
  return out;
}

std::string to_csv(const std::vector<ODInput>& inputs) {
  const bool with_cov = !inputs.empty() && std::all_of(inputs.begin(), inputs.end(),
                                                       [](const ODInput& i) { return i.gamma_d.has_value(); });
  std::ostringstream out;
  auto cols = csv_scalar_columns();
  if (with_cov) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) cols.push_back("gamma_p1_" + std::to_string(r) + std::to_string(c));
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) cols.push_back("gamma_a2_" + std::to_string(r) + std::to_string(c));
  }
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const ODInput& in : inputs) {
    std::vector<double> v = {in.p1.epoch, in.p1.alpha, in.p1.delta, in.p1.rho, in.a2.epoch,
                             in.a2.alpha, in.a2.delta, in.a2.alphadot, in.a2.deltadot};
    for (const auto* o : {&in.obs1, &in.obs2})
      for (const Vec3* w : {&o->q, &o->qdot}) v.insert(v.end(), {w->x, w->y, w->z});
    v.push_back(in.mu);
    v.push_back(in.c_light);
    if (with_cov) {
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) v.push_back((*in.gamma_d)(r, c));
      for (int r = 3; r < 7; ++r)
        for (int c = 3; c < 7; ++c) v.push_back((*in.gamma_d)(r, c));
    }
    out << "rad";
    for (double x : v) out << ',' << fmt17(x);
    out << '\n';
  }
  return out.str();
}

std::vector<ODInput> load_inputs(const std::filesystem::path& path, InputFormat format,
                                 const InputDefaults& defaults) {
  const std::string text = read_file(path);
  if (format == InputFormat::Csv) return parse_input_csv(text, defaults);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw OdError(ErrorKind::ParseError, e.what());
  }
  if (!j.is_array()) return {parse_input_json(text, defaults)};
  std::vector<ODInput> out;
  for (const json& rec : j) out.push_back(parse_input_json(rec.dump(), defaults));
  return out;
}

ODInput load_input(const std::filesystem::path& path, InputFormat format,
                   const InputDefaults& defaults) {
  auto all = load_inputs(path, format, defaults);
  if (all.empty()) throw OdError(ErrorKind::ParseError, "no records in " + path.string());
  return all.front();
}

void save_input(const ODInput& input, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw OdError(ErrorKind::ParseError, "cannot write " + path.string());
  f << to_json_string(input) << '\n';
}

AssembledStates assemble_states(const ODInput& input) {
  AssembledStates s;
  s.basis1 = los_basis(input.p1.alpha, input.p1.delta);
  s.basis2 = los_basis(input.a2.alpha, input.a2.delta);
  s.r1 = input.obs1.q + input.p1.rho * s.basis1.rho;
  s.e_perp2 = input.a2.alphadot * std::cos(input.a2.delta) * s.basis2.alpha +
              input.a2.deltadot * s.basis2.delta;
  return s;
}

std::string input_hash(const ODInput& input) {
  const std::string canon = to_json(input).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace kepod
