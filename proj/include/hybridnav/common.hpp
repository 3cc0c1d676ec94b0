#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace hybridnav {

using Vec3 = Eigen::Vector3d;
using Vec3i = Eigen::Vector3i;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kGravity = 9.81;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  if (!std::isfinite(a)) return a;
  a = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

/// Signed shortest difference a - b, wrapped to (-pi, pi].
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

inline bool all_finite(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

/// Raised for malformed input files and invalid arguments.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hybridnav
