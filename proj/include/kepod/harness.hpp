#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kepod/kepler.hpp"
#include "kepod/observations.hpp"
#include "kepod/select.hpp"
#include "kepod/solver.hpp"

namespace kepod {

/// GM of the Earth in au^3/day^2, used for the geocentric (q, upsilon) pair.
inline constexpr double kEarthMu = 8.887692587023176e-10;
inline constexpr double kArcsec = 4.84813681109536e-6;  // rad

struct HarnessConfig {
  double a_min = 0.7, a_max = 3.5;        // au
  double e_max = 0.9;
  double i_max = 40.0 * 0.017453292519943295;  // rad
  double span_min = 5.0, span_max = 30.0;  // days between t1 and t2bar
  double t1 = 0.0;
  double kick_max = 0.0;  // rad; rotation angle drawn uniformly in [0, kick_max]
  double sigma_angle = 0.0;  // rad, on alpha1, delta1, alpha2, delta2
  double sigma_rate = 0.0;   // rad/day, on alphadot2, deltadot2
  double sigma_rho = 0.0;    // au, on rho1
  bool attach_covariance = false;  // gamma_d = diag(sigma^2)
  double rho_min = 0.02;           // au
  double pole_margin = 1e-3;       // rad kept away from |delta| = pi/2
  double observer_radius = 1.0;    // au, circular orbit in the xy plane
  double mu = kGaussMu;
  int max_attempts = 64;
};

struct Kick {
  double angle = 0.0;  // rad
  Vec3 axis;           // unit, perpendicular to the pre-kick velocity
  double applied_at = 0.0;
};

struct SyntheticCase {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  int attempt = 0;  // substream that produced an accepted geometry
  double span = 0.0;
  KeplerianElements truth_pre;
  KeplerianElements truth_post;
  std::optional<Kick> kick;
  CartesianState truth1;  // post-kick state at t1
  CartesianState truth2;  // state at t2bar
  double truth_rho2 = 0.0;
  ODInput input;  // what the solver sees (noise applied)
  ODInput clean;  // the same without noise
};

/// Draws truth elements, observer phase and span from the (seed, index)
/// substream, rejecting geometries with rho < rho_min or near a pole.
/// span_scale stretches the drawn span while keeping everything at t1.
/// Throws GeometryRejected if max_attempts substreams all fail.
SyntheticCase generate_case(const HarnessConfig& config, std::uint64_t seed, std::uint64_t index,
                            double span_scale = 1.0);

/// Position at t1 from the case's object, attributable at t2bar from an
/// unrelated object drawn on its own substream with the same observer.
SyntheticCase generate_mismatched_case(const HarnessConfig& config, std::uint64_t seed,
                                       std::uint64_t index);

/// sqrt(((a1-a2)/a1)^2 + de^2 + di^2 + dOmega^2 + domega^2), angle
/// differences wrapped to (-pi, pi].
double trajectory_distance(const KeplerianElements& el1, const KeplerianElements& el2);

/// Pericenter distance and speed of the observer-centred two-body orbit at t1.
struct EncounterQV {
  double q = 0.0;        // au
  double upsilon = 0.0;  // au/day
};
EncounterQV encounter_qv(const CartesianState& body, const ObserverState& obs,
                         double mu_planet = kEarthMu);

enum class CaseStatus { Solved, NoSolution, Degenerate, Rejected, Error };
std::string to_string(CaseStatus s);

struct CaseRecord {
  std::uint64_t index = 0;
  int attempt = 0;
  CaseStatus status = CaseStatus::Error;
  std::string reason;
  bool retried = false;
  bool degeneracy_flag = false;  // |W12|^2 or pivot below threshold
  double span = 0.0;
  double truth_rho2 = 0.0;
  double chosen_rho2 = 0.0;
  double rho2_rel_err = 0.0;
  int n_candidates = 0;
  int n_accepted = 0;
  double da_rel = 0.0;  // (a_c - a_2) / a_2
  double de = 0.0;
  double di = 0.0;
  double dOmega = 0.0;
  double domega = 0.0;
  double delta_traj = 0.0;  // delta(T_c, T_2)
  double q = 0.0;
  double upsilon = 0.0;
};

struct BatchConfig {
  HarnessConfig harness;
  std::uint64_t n = 100;
  std::uint64_t seed = 1;
  bool retry = true;  // stretch the span by 10% once when nothing is accepted
  SolverConfig solver;
  Metric metric = Metric::Literal;
  int threads = 0;  // 0: OpenMP default
};

struct ColumnStats {
  std::string name;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t count = 0;
};

struct BatchResult {
  std::vector<CaseRecord> records;  // ordered by case index
  std::vector<ColumnStats> summary;
  std::size_t solved = 0;
  std::size_t failed = 0;
  std::size_t recovered_by_retry = 0;
};

/// Generate, solve and select one case.
CaseRecord run_case(const BatchConfig& config, std::uint64_t index);

/// Case-parallel batch (OpenMP) and the serial reference; identical output.
BatchResult run_batch(const BatchConfig& config);
BatchResult run_batch_serial(const BatchConfig& config);

/// Mean and sample std of the six element-difference columns over solved cases.
std::vector<ColumnStats> summarize(const std::vector<CaseRecord>& records);

extern const std::vector<std::string> kStatColumns;
double column_value(const CaseRecord& r, const std::string& column);

void write_records_csv(std::ostream& os, const std::vector<CaseRecord>& records);
std::vector<CaseRecord> read_records_csv(std::istream& is);

struct Histogram {
  std::string column;
  std::vector<double> edges;  // bins+1 edges
  std::vector<std::size_t> counts;
  std::size_t below = 0, above = 0;
};

/// Fixed-width bins over [lo, hi]; lo == hi picks the data range.
Histogram histogram(const std::vector<CaseRecord>& records, const std::string& column, int bins,
                    double lo = 0.0, double hi = 0.0);

}  // namespace kepod
