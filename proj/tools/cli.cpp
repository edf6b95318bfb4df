#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"

#include "kepod/checks.hpp"
#include "kepod/errors.hpp"
#include "kepod/harness.hpp"
#include "kepod/report.hpp"

namespace kepod::cli {

namespace {

using nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180.0;

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string g6(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double env_number(const char* name, double fallback) {
  const char* v = std::getenv(name);
  if (!v || !*v) return fallback;
  char* end = nullptr;
  const double x = std::strtod(v, &end);
  if (end == v || *end != '\0' || !std::isfinite(x)) {
    throw UsageError(std::string(name) + " is not a number: '" + v + "'");
  }
  return x;
}

InputDefaults env_defaults() {
  InputDefaults d;
  d.mu = env_number("KEPOD_MU", d.mu);
  d.c_light = env_number("KEPOD_C", d.c_light);
  if (!(d.mu > 0.0)) throw UsageError("KEPOD_MU must be positive");
  if (!(d.c_light >= 0.0)) throw UsageError("KEPOD_C must be non-negative");
  return d;
}

InputFormat format_of(const std::string& path, const std::string& forced) {
  if (forced == "json") return InputFormat::Json;
  if (forced == "csv") return InputFormat::Csv;
  const auto ext = std::filesystem::path(path).extension().string();
  return ext == ".csv" ? InputFormat::Csv : InputFormat::Json;
}

// Writes to -o when given, else to the stream passed in.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : os_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw UsageError("cannot open " + path + " for writing");
      os_ = &file_;
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

struct Options {
  std::string input, output, format;
  bool pretty = false;
  bool dump_coeffs = false;
  double chi3_threshold = 5.0;
  std::string metric = "paper";
  std::uint64_t seed = 1;
  std::uint64_t index = 0;
  std::uint64_t count = 1;
  std::uint64_t n = 100;
  int threads = 0;
  double tol_im = RootConfig{}.tol_im;
  double tol_dup = RootConfig{}.tol_dup;
  double tol_accept = SolverConfig{}.tol_accept;
  double tol_elem = SolverConfig{}.tol_elem;
  double scan_max = 10.0;
  int scan_n = 10000;
  int starts = 30;
  bool no_jacobian = false;
  double kick_deg = 0.0;
  double sigma_angle_arcsec = 0.0;
  double sigma_rate = 0.0;
  double sigma_rho = 0.0;
  bool covariance = false;
  bool mismatched = false;
  bool no_retry = false;
  std::string summary_out;
  std::vector<std::string> columns;
  int bins = 20;
  double lo = 0.0, hi = 0.0;
  bool summary = false;
};

SolverConfig solver_config(const Options& o) {
  SolverConfig s;
  s.roots.tol_im = o.tol_im;
  s.roots.tol_dup = o.tol_dup;
  s.tol_accept = o.tol_accept;
  s.tol_elem = o.tol_elem;
  return s;
}

HarnessConfig harness_config(const Options& o) {
  HarnessConfig h;
  h.kick_max = o.kick_deg * kDeg;
  h.sigma_angle = o.sigma_angle_arcsec * kArcsec;
  h.sigma_rate = o.sigma_rate;
  h.sigma_rho = o.sigma_rho;
  h.attach_covariance = o.covariance;
  return h;
}

std::vector<ODInput> read_inputs(const Options& o) {
  if (o.input.empty()) throw UsageError("-i is required");
  try {
    return load_inputs(o.input, format_of(o.input, o.format), env_defaults());
  } catch (const OdError& e) {
    throw UsageError(e.what());
  }
}

// --- solve ------------------------------------------------------------------

struct Solved {
  json report;
  bool ok = false;
  std::string failure;
};

Solved solve_one(const ODInput& in, const Options& o) {
  const SolverConfig config = solver_config(o);
  Solved out;
  SolveResult res;
  try {
    res = solve_detailed(in, config);
  } catch (const OdError& e) {
    out.failure = e.what();
    out.report = {{"input_hash", input_hash(in)},
                  {"tolerances", to_json(config)},
                  {"error", {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}}}};
    return out;
  }
  const Metric metric = metric_from_string(o.metric);
  std::optional<SelectionReport> sel;
  std::string sel_note;
  const bool any = std::any_of(res.candidates.begin(), res.candidates.end(),
                               [](const CandidateSolution& c) { return c.flags.accepted; });
  if (any) {
    try {
      sel = in.gamma_d ? select_with_cov(in, res.candidates, o.chi3_threshold, metric)
                       : select_no_cov(in, res.candidates, metric);
    } catch (const OdError& e) {
      sel_note = e.what();
      sel = select_no_cov(in, res.candidates, metric);
    }
  }
  ReportOptions ropt;
  ropt.dump_coeffs = o.dump_coeffs;
  out.report = solve_report(in, res, config, sel ? &*sel : nullptr, ropt);
  if (!sel_note.empty()) out.report["selection"]["note"] = sel_note;
  out.ok = any;
  if (!any) {
    out.failure = "NoAcceptedSolutions: none of " + std::to_string(res.candidates.size()) +
                  " candidates passed the filters";
  }
  return out;
}

void pretty_solve(std::ostream& os, const json& r) {
  os << "input " << r["input_hash"].get<std::string>() << '\n';
  if (r.contains("error")) {
    os << "  " << r["error"]["message"].get<std::string>() << '\n';
    return;
  }
  os << "  real roots:";
  for (const auto& x : r["real_roots"]) os << ' ' << g6(x.get<double>());
  os << '\n';
  char line[160];
  std::snprintf(line, sizeof line, "  %3s %14s %4s %10s %12s %10s  %s\n", "#", "rho2", "acc",
                "residual", "a", "e", "note");
  os << line;
  int k = 0;
  for (const auto& c : r["candidates"]) {
    const auto& el = c["elements2"];
    const double a = el.is_null() ? NAN : el["a"].get<double>();
    const double e = el.is_null() ? NAN : el["e"].get<double>();
    std::snprintf(line, sizeof line, "  %3d %14.9g %4s %10.2e %12.6g %10.6g  %s\n", k++,
                  c["unknowns"]["rho2"].get<double>(),
                  c["flags"]["accepted"].get<bool>() ? "yes" : "no",
                  c["residual_full"].is_null() ? NAN : c["residual_full"].get<double>(), a, e,
                  c["diagnostic"].get<std::string>().c_str());
    os << line;
  }
  const auto& s = r["selection"];
  if (s.is_null()) {
    os << "  no accepted solution\n";
    return;
  }
  const auto chosen = s["chosen_index"].get<std::size_t>();
  os << "  chosen: #" << chosen << " (metric " << s["metric"].get<std::string>();
  for (const auto& e : s["entries"]) {
    if (e["index"].get<std::size_t>() != chosen) continue;
    os << ", distance " << g6(e["distance"].get<double>());
    if (!e["chi3"].is_null()) os << ", chi3 " << g6(e["chi3"].get<double>());
  }
  os << ")\n";
}

int cmd_solve(const Options& o, std::ostream& out, std::ostream& err) {
  const auto inputs = read_inputs(o);
  std::vector<Solved> results;
  for (const auto& in : inputs) results.push_back(solve_one(in, o));
  Sink sink(o.output, out);
  if (o.pretty) {
    for (const auto& r : results) pretty_solve(*sink, r.report);
  } else if (results.size() == 1) {
    *sink << results.front().report.dump(2) << '\n';
  } else {
    json all = json::array();
    for (const auto& r : results) all.push_back(r.report);
    *sink << all.dump(2) << '\n';
  }
  bool ok = true;
  for (const auto& r : results) {
    if (r.ok) continue;
    ok = false;
    err << "kepod: " << r.failure << '\n';
  }
  return ok ? kOk : kNoSolution;
}

// --- generate ---------------------------------------------------------------

int cmd_generate(const Options& o, std::ostream& out, std::ostream&) {
  const HarnessConfig h = harness_config(o);
  std::vector<ODInput> inputs;
  for (std::uint64_t k = 0; k < o.count; ++k) {
    const auto idx = o.index + k;
    inputs.push_back(o.mismatched ? generate_mismatched_case(h, o.seed, idx).input
                                  : generate_case(h, o.seed, idx).input);
  }
  Sink sink(o.output, out);
  const bool csv = o.format == "csv" || (o.format.empty() && o.count > 1);
  if (csv) {
    *sink << to_csv(inputs);
  } else {
    if (o.count != 1) throw UsageError("JSON output holds one record; use --count 1 or --format csv");
    *sink << to_json_string(inputs.front()) << '\n';
  }
  return kOk;
}

// --- batch ------------------------------------------------------------------

void write_summary(std::ostream& os, const std::vector<ColumnStats>& summary) {
  os << "column,mean,std,count\n";
  for (const auto& s : summary) os << s.name << ',' << g17(s.mean) << ',' << g17(s.stddev) << ',' << s.count << '\n';
}

void pretty_summary(std::ostream& os, const BatchResult& r) {
  os << "cases " << r.records.size() << ", solved " << r.solved << ", failed " << r.failed
     << ", recovered by retry " << r.recovered_by_retry << '\n';
  char line[120];
  for (const auto& s : r.summary) {
    std::snprintf(line, sizeof line, "  %-12s mean %13.5e  std %13.5e  n %zu\n", s.name.c_str(),
                  s.mean, s.stddev, s.count);
    os << line;
  }
  for (const auto& c : r.records) {
    if (c.status == CaseStatus::Solved) continue;
    os << "  case " << c.index << ": " << to_string(c.status) << ' ' << c.reason << '\n';
  }
}

int cmd_batch(const Options& o, std::ostream& out, std::ostream& err) {
  BatchConfig b;
  b.harness = harness_config(o);
  b.n = o.n;
  b.seed = o.seed;
  b.retry = !o.no_retry;
  b.solver = solver_config(o);
  b.metric = metric_from_string(o.metric);
  b.threads = o.threads;
  const BatchResult r = run_batch(b);
  Sink sink(o.output, out);
  if (o.pretty) {
    pretty_summary(*sink, r);
  } else {
    write_records_csv(*sink, r.records);
  }
  if (!o.summary_out.empty()) {
    Sink s(o.summary_out, out);
    write_summary(*s, r.summary);
  }
  err << "kepod: solved " << r.solved << '/' << r.records.size() << ", recovered by retry "
      << r.recovered_by_retry << '\n';
  return kOk;
}

// --- stats ------------------------------------------------------------------

int cmd_stats(const Options& o, std::ostream& out, std::ostream&) {
  if (o.input.empty()) throw UsageError("-i is required");
  std::ifstream is(o.input);
  if (!is) throw UsageError("cannot open " + o.input);
  std::vector<CaseRecord> records;
  try {
    records = read_records_csv(is);
  } catch (const OdError& e) {
    throw UsageError(e.what());
  }
  Sink sink(o.output, out);
  if (o.summary) {
    write_summary(*sink, summarize(records));
    return kOk;
  }
  const auto columns = o.columns.empty() ? kStatColumns : o.columns;
  *sink << "column,bin,lo,hi,count\n";
  for (const auto& col : columns) {
    Histogram h;
    try {
      h = histogram(records, col, o.bins, o.lo, o.hi);
    } catch (const OdError& e) {
      throw UsageError(e.what());
    }
    *sink << col << ",below,-inf," << g17(h.edges.front()) << ',' << h.below << '\n';
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
      *sink << col << ',' << k << ',' << g17(h.edges[k]) << ',' << g17(h.edges[k + 1]) << ','
            << h.counts[k] << '\n';
    }
    *sink << col << ",above," << g17(h.edges.back()) << ",inf," << h.above << '\n';
  }
  return kOk;
}

// --- oracle-check -----------------------------------------------------------

int cmd_oracle_check(const Options& o, std::ostream& out, std::ostream& err) {
  const auto inputs = read_inputs(o);
  CrossCheckConfig c;
  c.rho2_max = o.scan_max;
  c.scan_points = o.scan_n;
  c.starts = o.starts;
  c.seed = o.seed;
  c.jacobian = !o.no_jacobian;
  c.solver = solver_config(o);
  Sink sink(o.output, out);
  bool all = true;
  char line[200];
  for (const auto& in : inputs) {
    *sink << "input " << input_hash(in) << '\n';
    std::vector<CheckResult> checks;
    try {
      checks = cross_check(in, c);
    } catch (const OdError& e) {
      err << "kepod: " << e.what() << '\n';
      all = false;
      continue;
    }
    std::snprintf(line, sizeof line, "  %-34s %12s %10s  %s\n", "check", "value", "tol", "result");
    *sink << line;
    for (const auto& r : checks) {
      std::snprintf(line, sizeof line, "  %-34s %12.4g %10.3g  %s  %s\n", r.name.c_str(), r.value,
                    r.tol, r.pass ? "PASS" : "FAIL", r.detail.c_str());
      *sink << line;
      all = all && r.pass;
    }
  }
  return all ? kOk : kCheckFailed;
}

void add_solver_flags(CLI::App* app, Options& o) {
  app->add_option("--tol-im", o.tol_im, "max |Im z|/(1+|Re z|) for a real root")
      ->check(CLI::PositiveNumber);
  app->add_option("--tol-dup", o.tol_dup, "merge distance for real roots")->check(CLI::PositiveNumber);
  app->add_option("--tol-accept", o.tol_accept, "max normalized residual of an accepted candidate")
      ->check(CLI::PositiveNumber);
  app->add_option("--tol-elem", o.tol_elem, "max element gap between the two epochs")
      ->check(CLI::PositiveNumber);
}

void add_io_flags(CLI::App* app, Options& o, bool need_input) {
  auto* i = app->add_option("-i,--input", o.input, "input file (.json or .csv)");
  if (need_input) i->required();
  app->add_option("-o,--output", o.output, "write here instead of stdout");
  app->add_option("--format", o.format, "force the file format")->check(CLI::IsMember({"json", "csv"}));
}

void add_generator_flags(CLI::App* app, Options& o) {
  app->add_option("--seed", o.seed, "base seed");
  app->add_option("--kick-deg", o.kick_deg, "max velocity rotation at t1, degrees")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--sigma-angle", o.sigma_angle_arcsec, "angle noise, arcsec")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--sigma-rate", o.sigma_rate, "angular rate noise, rad/day")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--sigma-rho", o.sigma_rho, "range noise, au")->check(CLI::NonNegativeNumber);
  app->add_flag("--covariance", o.covariance, "attach diag(sigma^2) as the data covariance");
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Preliminary orbits from one topocentric position and one attributable."};
  app.require_subcommand(1);
  Options o;

  auto* solve = app.add_subcommand("solve", "solve one or more inputs and select a candidate");
  add_io_flags(solve, o, true);
  add_solver_flags(solve, o);
  solve->add_flag("--pretty", o.pretty, "human-readable summary instead of JSON");
  solve->add_flag("--dump-coeffs", o.dump_coeffs, "include Q, P5, P6 and v0..v8 in the output");
  solve->add_option("--chi3-threshold", o.chi3_threshold, "keep candidates with chi3 below this")
      ->check(CLI::PositiveNumber);
  solve->add_option("--metric", o.metric, "distance for selection without covariance")
      ->check(CLI::IsMember({"paper", "weighted"}));

  auto* gen = app.add_subcommand("generate", "write synthetic inputs");
  gen->add_option("-o,--output", o.output, "write here instead of stdout");
  gen->add_option("--format", o.format, "json (one record) or csv")->check(CLI::IsMember({"json", "csv"}));
  gen->add_option("--index", o.index, "first case index");
  gen->add_option("--count", o.count, "number of cases")->check(CLI::PositiveNumber);
  gen->add_flag("--mismatched", o.mismatched, "attributable from an unrelated object");
  add_generator_flags(gen, o);

  auto* batch = app.add_subcommand("batch", "generate, solve and score synthetic cases");
  batch->add_option("-o,--output", o.output, "per-case CSV destination");
  batch->add_option("--summary-out", o.summary_out, "mean/std CSV destination");
  batch->add_option("-n,--cases", o.n, "number of cases")->check(CLI::PositiveNumber);
  batch->add_option("--threads", o.threads, "worker threads (default: OpenMP's choice)")
      ->check(CLI::PositiveNumber);
  batch->add_flag("--no-retry", o.no_retry, "do not retry failures with a 10% longer span");
  batch->add_flag("--pretty", o.pretty, "summary table instead of CSV");
  batch->add_option("--metric", o.metric, "distance for selection")->check(CLI::IsMember({"paper", "weighted"}));
  add_generator_flags(batch, o);
  add_solver_flags(batch, o);

  auto* stats = app.add_subcommand("stats", "histogram tables from a batch CSV");
  stats->add_option("-i,--input", o.input, "batch CSV")->required();
  stats->add_option("-o,--output", o.output, "write here instead of stdout");
  stats->add_option("--column", o.columns, "column to bin (repeatable; default the six statistics)");
  stats->add_option("--bins", o.bins, "number of bins")->check(CLI::PositiveNumber);
  stats->add_option("--lo", o.lo, "lower edge (lo == hi: data range)");
  stats->add_option("--hi", o.hi, "upper edge");
  stats->add_flag("--summary", o.summary, "mean/std per column instead of histograms");

  auto* check = app.add_subcommand("oracle-check", "compare the solver with the brute-force references");
  add_io_flags(check, o, true);
  add_solver_flags(check, o);
  check->add_option("--scan-max", o.scan_max, "upper end of the rho2 scan, au")->check(CLI::PositiveNumber);
  check->add_option("--scan-n", o.scan_n, "scan samples")->check(CLI::Range(100, 10000000));
  check->add_option("--starts", o.starts, "multi-start seeds")->check(CLI::PositiveNumber);
  check->add_option("--seed", o.seed, "multi-start seed");
  check->add_flag("--no-jacobian", o.no_jacobian, "skip the dS/dD finite-difference check");

  std::vector<std::string> args(argv.rbegin(), argv.rend() - (argv.empty() ? 0 : 1));
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "kepod: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (*solve) return cmd_solve(o, out, err);
    if (*gen) return cmd_generate(o, out, err);
    if (*batch) return cmd_batch(o, out, err);
    if (*stats) return cmd_stats(o, out, err);
    if (*check) return cmd_oracle_check(o, out, err);
  } catch (const UsageError& e) {
    err << "kepod: " << e.what() << '\n';
    return kUsage;
  } catch (const OdError& e) {
    err << "kepod: " << e.what() << '\n';
    return *solve ? kNoSolution : kUsage;
  }
  return kUsage;
}

}  // namespace kepod::cli
