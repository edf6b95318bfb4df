#include "kepod/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "kepod/errors.hpp"

namespace kepod {

namespace {

constexpr std::uint32_t kTruthStream = 1;
constexpr std::uint32_t kMismatchStream = 2;

std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index, int attempt, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(attempt), tag};
  return std::mt19937_64(seq);
}

struct Draws {
  std::mt19937_64 rng;
  std::uniform_real_distribution<double> u{0.0, 1.0};
  std::normal_distribution<double> n{0.0, 1.0};
  double uniform() { return u(rng); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * u(rng); }
  double normal() { return n(rng); }
};

KeplerianElements draw_elements(Draws& d, const HarnessConfig& c) {
  KeplerianElements el;
  el.a = d.uniform(c.a_min, c.a_max);
  el.e = d.uniform(0.0, c.e_max);
  el.i = d.uniform(0.0, c.i_max);
  el.Omega = d.uniform(0.0, 2.0 * std::numbers::pi);
  el.omega = d.uniform(0.0, 2.0 * std::numbers::pi);
  el.ell = d.uniform(0.0, 2.0 * std::numbers::pi);
  el.epoch = c.t1;
  el.mu = c.mu;
  return el;
}

ObserverState observer_at(const HarnessConfig& c, double phase, double t) {
  const double radius = c.observer_radius;
  const double n = std::sqrt(c.mu / (radius * radius * radius));
  const double th = phase + n * (t - c.t1);
  ObserverState o;
  o.q = {radius * std::cos(th), radius * std::sin(th), 0.0};
  o.qdot = {-radius * n * std::sin(th), radius * n * std::cos(th), 0.0};
  o.epoch = t;
  return o;
}

bool acceptable(const HarnessConfig& c, const Vec3& topo) {
  const double rho = norm(topo);
  if (!(rho >= c.rho_min)) return false;
  return std::abs(std::asin(topo.z / rho)) < std::numbers::pi / 2 - c.pole_margin;
}

TopocentricPosition position_of(const Vec3& topo, double epoch) {
  TopocentricPosition p;
  p.rho = norm(topo);
  p.alpha = std::atan2(topo.y, topo.x);
  p.delta = std::asin(topo.z / p.rho);
  p.epoch = epoch;
  return p;
}

Attributable attributable_of(const CartesianState& body, const ObserverState& obs) {
  const Vec3 d = body.r - obs.q, w = body.v - obs.qdot;
  const double rho = norm(d);
  Attributable a;
  a.alpha = std::atan2(d.y, d.x);
  a.delta = std::asin(d.z / rho);
  const LosBasis b = los_basis(a.alpha, a.delta);
  a.alphadot = dot(w, b.alpha) / (rho * std::cos(a.delta));
  a.deltadot = dot(w, b.delta) / rho;
  a.epoch = obs.epoch;
  return a;
}

Vec3 random_perpendicular(Draws& d, const Vec3& v) {
  const Vec3 g{d.normal(), d.normal(), d.normal()};
  const Vec3 vh = unit(v);
  return unit(g - dot(g, vh) * vh);
}

// Noise draws happen unconditionally so substreams do not depend on sigmas.
void apply_noise(Draws& d, const HarnessConfig& c, ODInput& in, bool position, bool attributable) {
  std::array<double, 7> z{};
  for (double& x : z) x = d.normal();
  if (position) {
    in.p1.alpha = wrap_pi(in.p1.alpha + c.sigma_angle * z[0]);
    in.p1.delta += c.sigma_angle * z[1];
    in.p1.rho += c.sigma_rho * z[2];
  }
  if (attributable) {
    in.a2.alpha = wrap_pi(in.a2.alpha + c.sigma_angle * z[3]);
    in.a2.delta += c.sigma_angle * z[4];
    in.a2.alphadot += c.sigma_rate * z[5];
    in.a2.deltadot += c.sigma_rate * z[6];
  }
  if (c.attach_covariance) {
    Cov7 g = Cov7::Zero();
    const double sa = c.sigma_angle * c.sigma_angle, sr = c.sigma_rate * c.sigma_rate;
    g.diagonal() << sa, sa, c.sigma_rho * c.sigma_rho, sa, sa, sr, sr;
    in.gamma_d = g;
  }
}

}  // namespace

SyntheticCase generate_case(const HarnessConfig& config, std::uint64_t seed, std::uint64_t index,
                            double span_scale) {
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    Draws d{substream(seed, index, attempt, kTruthStream)};
    SyntheticCase sc;
    sc.seed = seed;
    sc.index = index;
    sc.attempt = attempt;
    sc.truth_pre = draw_elements(d, config);
    sc.span = d.uniform(config.span_min, config.span_max) * span_scale;
    const double phase = d.uniform(0.0, 2.0 * std::numbers::pi);
    const double kick_angle = d.uniform(0.0, config.kick_max);

    const CartesianState pre = cartesian_from_elements(sc.truth_pre);
    const Vec3 axis = random_perpendicular(d, pre.v);
    sc.truth1 = pre;
    if (config.kick_max > 0.0) {
      sc.kick = Kick{kick_angle, axis, config.t1};
      sc.truth1.v = std::cos(kick_angle) * pre.v + std::sin(kick_angle) * cross(axis, pre.v);
    }
    sc.truth_post = elements_from_cartesian(sc.truth1);
    const double t2 = config.t1 + sc.span;
    sc.truth2 = propagate(sc.truth1, sc.span);

    ODInput& in = sc.clean;
    in.mu = config.mu;
    in.c_light = 0.0;
    in.obs1 = observer_at(config, phase, config.t1);
    in.obs2 = observer_at(config, phase, t2);
    const Vec3 topo1 = sc.truth1.r - in.obs1.q, topo2 = sc.truth2.r - in.obs2.q;
    if (!acceptable(config, topo1) || !acceptable(config, topo2)) continue;
    in.p1 = position_of(topo1, config.t1);
    in.a2 = attributable_of(sc.truth2, in.obs2);
    sc.truth_rho2 = norm(topo2);

    sc.input = sc.clean;
    apply_noise(d, config, sc.input, true, true);
    if (!(sc.input.p1.rho > 0.0)) continue;
    return sc;
  }
  throw OdError(ErrorKind::GeometryRejected,
                "no acceptable geometry in " + std::to_string(config.max_attempts) + " substreams");
}

SyntheticCase generate_mismatched_case(const HarnessConfig& config, std::uint64_t seed,
                                       std::uint64_t index) {
  SyntheticCase sc = generate_case(config, seed, index);
  const double t2 = sc.clean.a2.epoch;
  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    Draws d{substream(seed, index, attempt, kMismatchStream)};
    const CartesianState other = cartesian_from_elements(draw_elements(d, config));
    const CartesianState other2 = propagate(other, t2 - config.t1);
    if (!acceptable(config, other2.r - sc.clean.obs2.q)) continue;
    sc.clean.a2 = attributable_of(other2, sc.clean.obs2);
    const TopocentricPosition p1 = sc.input.p1;
    sc.input = sc.clean;
    apply_noise(d, config, sc.input, false, true);
    sc.input.p1 = p1;
    sc.truth_rho2 = std::numeric_limits<double>::quiet_NaN();
    return sc;
  }
  throw OdError(ErrorKind::GeometryRejected, "no acceptable second object");
}

double trajectory_distance(const KeplerianElements& el1, const KeplerianElements& el2) {
  const double da = (el1.a - el2.a) / el1.a;
  const double de = el1.e - el2.e;
  const double di = wrap_pi(el1.i - el2.i);
  const double dO = wrap_pi(el1.Omega - el2.Omega);
  const double dw = wrap_pi(el1.omega - el2.omega);
  return std::sqrt(da * da + de * de + di * di + dO * dO + dw * dw);
}

EncounterQV encounter_qv(const CartesianState& body, const ObserverState& obs, double mu_planet) {
  const Vec3 r = body.r - obs.q, v = body.v - obs.qdot;
  const Vec3 c = cross(r, v);
  const Vec3 lv = cross(v, c) / mu_planet - unit(r);
  const double p = norm2(c) / mu_planet;
  EncounterQV out;
  out.q = p / (1.0 + norm(lv));
  out.upsilon = norm(c) / out.q;
  return out;
}

std::string to_string(CaseStatus s) {
  switch (s) {
    case CaseStatus::Solved: return "solved";
    case CaseStatus::NoSolution: return "no_solution";
    case CaseStatus::Degenerate: return "degenerate";
    case CaseStatus::Rejected: return "rejected";
    case CaseStatus::Error: return "error";
  }
  return "error";
}

namespace {

CaseStatus status_from_string(const std::string& s) {
  for (CaseStatus c : {CaseStatus::Solved, CaseStatus::NoSolution, CaseStatus::Degenerate,
                       CaseStatus::Rejected, CaseStatus::Error})
    if (to_string(c) == s) return c;
  throw OdError(ErrorKind::ParseError, "unknown case status '" + s + "'");
}

// One solve-and-select pass; returns false when nothing was accepted.
bool attempt_case(const BatchConfig& config, const SyntheticCase& sc, CaseRecord& rec) {
  rec.attempt = sc.attempt;
  rec.span = sc.span;
  rec.truth_rho2 = sc.truth_rho2;
  SolveResult res;
  try {
    res = solve_detailed(sc.input, config.solver);
  } catch (const OdError& e) {
    rec.status = e.kind() == ErrorKind::DegenerateGeometry ? CaseStatus::Degenerate : CaseStatus::Error;
    rec.degeneracy_flag = e.kind() == ErrorKind::DegenerateGeometry;
    rec.reason = e.what();
    return false;
  }
  rec.degeneracy_flag = res.coefficients.elim.degenerate();
  rec.n_candidates = static_cast<int>(res.candidates.size());
  rec.n_accepted = 0;
  for (const CandidateSolution& c : res.candidates) {
    rec.n_accepted += c.flags.accepted ? 1 : 0;
    if (c.diagnostic.rfind("NearSingularPivot", 0) == 0) rec.degeneracy_flag = true;
  }
  if (rec.n_accepted == 0) {
    rec.status = CaseStatus::NoSolution;
    rec.reason = "no accepted candidate among " + std::to_string(rec.n_candidates);
    return false;
  }
  const SelectionReport rep = select_no_cov(sc.input, res.candidates, config.metric);
  const CandidateSolution& chosen = res.candidates[rep.chosen_index];
  const KeplerianElements truth = elements_from_cartesian(sc.truth2);
  const KeplerianElements& comp = *chosen.elements2;
  rec.status = CaseStatus::Solved;
  rec.reason.clear();
  rec.chosen_rho2 = chosen.unknowns.rho2;
  rec.rho2_rel_err = std::abs(chosen.unknowns.rho2 - sc.truth_rho2) / sc.truth_rho2;
  rec.da_rel = (comp.a - truth.a) / truth.a;
  rec.de = comp.e - truth.e;
  rec.di = wrap_pi(comp.i - truth.i);
  rec.dOmega = wrap_pi(comp.Omega - truth.Omega);
  rec.domega = wrap_pi(comp.omega - truth.omega);
  rec.delta_traj = trajectory_distance(comp, truth);
  return true;
}

BatchResult finish(std::vector<CaseRecord> records) {
  BatchResult out;
  out.records = std::move(records);
  for (const CaseRecord& r : out.records) {
    if (r.status == CaseStatus::Solved) {
      ++out.solved;
      if (r.retried) ++out.recovered_by_retry;
    } else {
      ++out.failed;
    }
  }
  out.summary = summarize(out.records);
  return out;
}

}  // namespace

CaseRecord run_case(const BatchConfig& config, std::uint64_t index) {
  CaseRecord rec;
  rec.index = index;
  try {
    const SyntheticCase sc = generate_case(config.harness, config.seed, index);
    const EncounterQV qv = encounter_qv(sc.truth1, sc.clean.obs1);
    rec.q = qv.q;
    rec.upsilon = qv.upsilon;
    if (attempt_case(config, sc, rec) || !config.retry || rec.status == CaseStatus::Error) return rec;
    const SyntheticCase longer = generate_case(config.harness, config.seed, index, 1.1);
    rec.retried = true;
    attempt_case(config, longer, rec);
  } catch (const OdError& e) {
    rec.status = e.kind() == ErrorKind::GeometryRejected ? CaseStatus::Rejected : CaseStatus::Error;
    rec.reason = e.what();
  }
  return rec;
}

BatchResult run_batch(const BatchConfig& config) {
  std::vector<CaseRecord> records(config.n);
  const auto n = static_cast<long long>(config.n);
  const int threads = config.threads > 0 ? config.threads : 0;
  if (threads > 0) {
#pragma omp parallel for schedule(dynamic, 4) num_threads(threads)
    for (long long i = 0; i < n; ++i) records[i] = run_case(config, static_cast<std::uint64_t>(i));
  } else {
#pragma omp parallel for schedule(dynamic, 4)
    for (long long i = 0; i < n; ++i) records[i] = run_case(config, static_cast<std::uint64_t>(i));
  }
  return finish(std::move(records));
}

BatchResult run_batch_serial(const BatchConfig& config) {
  std::vector<CaseRecord> records;
  records.reserve(config.n);
  for (std::uint64_t i = 0; i < config.n; ++i) records.push_back(run_case(config, i));
  return finish(std::move(records));
}

const std::vector<std::string> kStatColumns{"da_rel", "de", "di", "dOmega", "domega", "delta_traj"};

double column_value(const CaseRecord& r, const std::string& column) {
  static const std::map<std::string, double CaseRecord::*> fields{
      {"span", &CaseRecord::span},           {"truth_rho2", &CaseRecord::truth_rho2},
      {"chosen_rho2", &CaseRecord::chosen_rho2}, {"rho2_rel_err", &CaseRecord::rho2_rel_err},
      {"da_rel", &CaseRecord::da_rel},       {"de", &CaseRecord::de},
      {"di", &CaseRecord::di},               {"dOmega", &CaseRecord::dOmega},
      {"domega", &CaseRecord::domega},       {"delta_traj", &CaseRecord::delta_traj},
      {"q", &CaseRecord::q},                 {"upsilon", &CaseRecord::upsilon}};
  const auto it = fields.find(column);
  if (it == fields.end()) throw OdError(ErrorKind::ValidationError, "unknown column '" + column + "'");
  return r.*(it->second);
}

std::vector<ColumnStats> summarize(const std::vector<CaseRecord>& records) {
  std::vector<ColumnStats> out;
  for (const std::string& col : kStatColumns) {
    ColumnStats s;
    s.name = col;
    double sum = 0.0;
    for (const CaseRecord& r : records)
      if (r.status == CaseStatus::Solved) {
        sum += column_value(r, col);
        ++s.count;
      }
    if (s.count > 0) s.mean = sum / static_cast<double>(s.count);
    double ss = 0.0;
    for (const CaseRecord& r : records)
      if (r.status == CaseStatus::Solved) {
        const double d = column_value(r, col) - s.mean;
        ss += d * d;
      }
    if (s.count > 1) s.stddev = std::sqrt(ss / static_cast<double>(s.count - 1));
    out.push_back(s);
  }
  return out;
}

namespace {

const std::vector<std::string> kCsvHeader{
    "index",     "attempt",      "status",       "reason",     "retried", "degeneracy_flag",
    "span",      "truth_rho2",   "chosen_rho2",  "rho2_rel_err", "n_candidates", "n_accepted",
    "da_rel",    "de",           "di",           "dOmega",     "domega",  "delta_traj",
    "q",         "upsilon"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string clean_reason(std::string s) {
  std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '\n' || c == '\r'; }, ';');
  return s;
}

}  // namespace

void write_records_csv(std::ostream& os, const std::vector<CaseRecord>& records) {
  for (std::size_t k = 0; k < kCsvHeader.size(); ++k) os << (k ? "," : "") << kCsvHeader[k];
  os << '\n';
  for (const CaseRecord& r : records) {
    os << r.index << ',' << r.attempt << ',' << to_string(r.status) << ',' << clean_reason(r.reason)
       << ',' << (r.retried ? 1 : 0) << ',' << (r.degeneracy_flag ? 1 : 0) << ',' << num(r.span) << ','
       << num(r.truth_rho2) << ',' << num(r.chosen_rho2) << ',' << num(r.rho2_rel_err) << ','
       << r.n_candidates << ',' << r.n_accepted << ',' << num(r.da_rel) << ',' << num(r.de) << ','
       << num(r.di) << ',' << num(r.dOmega) << ',' << num(r.domega) << ',' << num(r.delta_traj) << ','
       << num(r.q) << ',' << num(r.upsilon) << '\n';
  }
}

std::vector<CaseRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw OdError(ErrorKind::ParseError, "empty batch CSV");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header != kCsvHeader) throw OdError(ErrorKind::ParseError, "unexpected batch CSV header");
  std::vector<CaseRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != kCsvHeader.size())
      throw OdError(ErrorKind::ParseError, "batch CSV row has " + std::to_string(cells.size()) + " cells");
    try {
      CaseRecord r;
      r.index = std::stoull(cells[0]);
      r.attempt = std::stoi(cells[1]);
      r.status = status_from_string(cells[2]);
      r.reason = cells[3];
      r.retried = cells[4] == "1";
      r.degeneracy_flag = cells[5] == "1";
      r.span = std::stod(cells[6]);
      r.truth_rho2 = std::stod(cells[7]);
      r.chosen_rho2 = std::stod(cells[8]);
      r.rho2_rel_err = std::stod(cells[9]);
      r.n_candidates = std::stoi(cells[10]);
      r.n_accepted = std::stoi(cells[11]);
      r.da_rel = std::stod(cells[12]);
      r.de = std::stod(cells[13]);
      r.di = std::stod(cells[14]);
      r.dOmega = std::stod(cells[15]);
      r.domega = std::stod(cells[16]);
      r.delta_traj = std::stod(cells[17]);
      r.q = std::stod(cells[18]);
      r.upsilon = std::stod(cells[19]);
      out.push_back(r);
    } catch (const std::logic_error& e) {
      throw OdError(ErrorKind::ParseError, std::string("bad batch CSV value: ") + e.what());
    }
  }
  return out;
}

Histogram histogram(const std::vector<CaseRecord>& records, const std::string& column, int bins,
                    double lo, double hi) {
  if (bins < 1) throw OdError(ErrorKind::ValidationError, "histogram needs at least one bin");
  std::vector<double> values;
  for (const CaseRecord& r : records) {
    if (r.status != CaseStatus::Solved) continue;
    const double v = column_value(r, column);
    if (std::isfinite(v)) values.push_back(v);
  }
  if (lo == hi && !values.empty()) {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx;
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
  if (!(hi > lo)) throw OdError(ErrorKind::ValidationError, "histogram range is empty");
  Histogram h;
  h.column = column;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (int k = 0; k <= bins; ++k) h.edges.push_back(lo + (hi - lo) * k / bins);
  for (double v : values) {
    if (v < lo) {
      ++h.below;
    } else if (v > hi) {
      ++h.above;
    } else {
      const auto k = std::min<std::size_t>(static_cast<std::size_t>((v - lo) / (hi - lo) * bins),
                                           static_cast<std::size_t>(bins - 1));
      ++h.counts[k];
    }
  }
  return h;
}

}  // namespace kepod
