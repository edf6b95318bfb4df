#pragma once

#include <cmath>
#include <random>
#include <string>

#include "kepod/geom3.hpp"
#include "kepod/observations.hpp"

namespace kepod::test {

inline std::string fixture_path(const std::string& name) {
  return std::string(KEPOD_FIXTURE_DIR) + "/" + name;
}

inline ODInput fixture(const std::string& name) {
  return load_input(fixture_path(name), InputFormat::Json);
}

inline double rel(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

inline Vec3 random_vec(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return {n(rng), n(rng), n(rng)};
}

}  // namespace kepod::test
