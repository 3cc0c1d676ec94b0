#pragma once

#include "hybridnav/robot_state.hpp"
#include "hybridnav/trajectory.hpp"

#include <Eigen/Core>

#include <utility>

namespace hybridnav {

struct ControlCommand {
  double f_thr = 0.0;                // normalized throttle in [0, 1]
  Vec3 body_rates = Vec3::Zero();   // rad/s
};

struct TerrestrialGains {
  double K_y = 5.0;
  double lambda_p_far = 0.7;   // position-correction weight above p_err_threshold
  double lambda_p_near = 0.2;  // and below it
  double p_err_threshold = 0.15;
  double K_p = 1.0;
  double K_thr = 1.0;
  double f_thr_crawl_max = 0.2;
  double fit_slope = 6.838;
  double fit_intercept = 0.0016;

  void validate() const;
};

struct AerialGains {
  Vec3 kp = Vec3(2.0, 2.0, 3.0);
  Vec3 kv = Vec3(2.5, 2.5, 3.0);
  double hover_throttle = 0.5;
  double k_att = 8.0;

  void validate() const;
};

/// (lambda_d, lambda_p) for a horizontal position error of norm `err`.
std::pair<double, double> blend_weights(double err, const TerrestrialGains& g);

double yaw_rate_cmd(const Setpoint& sp, const RobotState& rs, const TerrestrialGains& g);

double throttle_cmd(const Setpoint& sp, const RobotState& rs, const TerrestrialGains& g);

ControlCommand terrestrial_track(const Setpoint& sp, const RobotState& rs,
                                 const TerrestrialGains& g);

ControlCommand aerial_track(const Setpoint& sp, const RobotState& rs, const AerialGains& g);

/// Rotation for X-Y-Z Euler angles (roll, pitch, yaw): R = Rz(yaw) Ry(pitch) Rx(roll).
Eigen::Matrix3d rotation_from_euler(const Vec3& theta);
Vec3 euler_from_rotation(const Eigen::Matrix3d& R);

/// Rotation vector of R (inverse of the exponential map).
Vec3 rotation_log(const Eigen::Matrix3d& R);

}  // namespace hybridnav
