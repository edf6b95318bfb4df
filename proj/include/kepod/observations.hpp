#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kepod/geom3.hpp"

namespace kepod {

/// Gauss gravitational constant squared, au^3/day^2.
inline constexpr double kGaussMu = 0.01720209895 * 0.01720209895;
/// Speed of light, au/day.
inline constexpr double kLightSpeed = 173.144632674;

/// P1 = (alpha1, delta1, rho1) at t1.
struct TopocentricPosition {
  double alpha = 0.0;  // rad
  double delta = 0.0;  // rad
  double rho = 0.0;    // au
  double epoch = 0.0;  // day
};

/// A2 = (alpha2, delta2, alphadot2, deltadot2) at the mean epoch of the arc.
struct Attributable {
  double alpha = 0.0;     // rad
  double delta = 0.0;     // rad
  double alphadot = 0.0;  // rad/day
  double deltadot = 0.0;  // rad/day
  double epoch = 0.0;     // day
};

struct ObserverState {
  Vec3 q;     // au
  Vec3 qdot;  // au/day
  double epoch = 0.0;
};

using Cov7 = Eigen::Matrix<double, 7, 7>;

/// Everything the solver consumes.  Positions and velocities live in one
/// inertial frame centred on the attracting body; epochs share one uniform
/// time scale.  Frame and time-scale conversions belong to the caller.
struct ODInput {
  TopocentricPosition p1;
  Attributable a2;
  ObserverState obs1;
  ObserverState obs2;
  double mu = kGaussMu;
  /// Speed of light for the light-time epochs; 0 disables the correction.
  double c_light = kLightSpeed;
  /// Block diagonal covariance of D = (alpha1, delta1, rho1, alpha2, delta2,
  /// alphadot2, deltadot2) in radians / au / days.
  std::optional<Cov7> gamma_d;
};

enum class InputFormat { Json, Csv };

/// Values used when a record omits mu or c.
struct InputDefaults {
  double mu = kGaussMu;
  double c_light = kLightSpeed;
};

/// Throws OdError(ValidationError) on the first violated invariant.
void validate(const ODInput& input);

/// Parses one JSON record.  Angles follow the record's `units` field
/// ("deg" or "rad", rates per day).  Throws ParseError or ValidationError.
ODInput parse_input_json(const std::string& text, const InputDefaults& defaults = {});
/// Serializes in radians; parse_input_json(to_json_string(x)) == x bit for bit.
std::string to_json_string(const ODInput& input, int indent = 2);

/// CSV batch: header row plus one record per row.
std::vector<ODInput> parse_input_csv(const std::string& text, const InputDefaults& defaults = {});
std::string to_csv(const std::vector<ODInput>& inputs);

/// Loads the first record of a file (JSON) or all rows (CSV) and returns the first.
ODInput load_input(const std::filesystem::path& path, InputFormat format,
                   const InputDefaults& defaults = {});
std::vector<ODInput> load_inputs(const std::filesystem::path& path, InputFormat format,
                                 const InputDefaults& defaults = {});
void save_input(const ODInput& input, const std::filesystem::path& path);

/// Known quantities derived straight from the data.
struct AssembledStates {
  Vec3 r1;          // q1 + rho1 e_rho1
  LosBasis basis1;
  LosBasis basis2;
  Vec3 e_perp2;     // alphadot2 cos(delta2) e_alpha2 + deltadot2 e_delta2
};

AssembledStates assemble_states(const ODInput& input);

/// FNV-1a over the canonical JSON form; identifies an input in output records.
std::string input_hash(const ODInput& input);

}  // namespace kepod
