#pragma once

#include "hybridnav/common.hpp"

namespace hybridnav {

/// Estimated robot state; attitude as X-Y-Z Euler angles (roll, pitch, yaw).
struct RobotState {
  Vec3 p_hat = Vec3::Zero();
  Vec3 v_hat = Vec3::Zero();
  Vec3 theta_hat = Vec3::Zero();
  Vec3 theta_dot_hat = Vec3::Zero();

  [[nodiscard]] double yaw() const { return theta_hat.z(); }
};

}  // namespace hybridnav
