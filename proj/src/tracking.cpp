#include "hybridnav/tracking.hpp"

#include <Eigen/Geometry>

#include <algorithm>

namespace hybridnav {

namespace {

constexpr double kZeroError = 1e-6;

}  // namespace

void TerrestrialGains::validate() const {
  if (!(K_y > 0 && K_p > 0 && K_thr > 0 && p_err_threshold > 0 && fit_slope > 0))
    throw InputError("terrestrial gains must be positive");
  if (lambda_p_far < 0 || lambda_p_far > 1 || lambda_p_near < 0 || lambda_p_near > 1)
    throw InputError("lambda_p weights must be in [0, 1]");
  if (!(f_thr_crawl_max > 0 && f_thr_crawl_max <= 1))
    throw InputError("f_thr_crawl_max must be in (0, 1]");
}

void AerialGains::validate() const {
  if (!(kp.minCoeff() >= 0 && kv.minCoeff() >= 0 && k_att > 0))
    throw InputError("aerial gains must be non-negative");
  if (!(hover_throttle > 0 && hover_throttle < 1))
    throw InputError("hover_throttle must be in (0, 1)");
}

std::pair<double, double> blend_weights(double err, const TerrestrialGains& g) {
  const double lambda_p = err > g.p_err_threshold ? g.lambda_p_far : g.lambda_p_near;
  return {1.0 - lambda_p, lambda_p};
}

double yaw_rate_cmd(const Setpoint& sp, const RobotState& rs, const TerrestrialGains& g) {
  const double yaw = rs.yaw();
  const double ex = sp.p_d.x() - rs.p_hat.x();
  const double ey = sp.p_d.y() - rs.p_hat.y();
  const double err = std::hypot(ex, ey);
  const double psi_d = angle_diff(sp.yaw_d, yaw);
  const double psi_p = err < kZeroError ? 0.0 : angle_diff(std::atan2(ey, ex), yaw);
  const auto [lambda_d, lambda_p] = blend_weights(err, g);
  return g.K_y * (lambda_d * psi_d + lambda_p * psi_p);
}

double throttle_cmd(const Setpoint& sp, const RobotState& rs, const TerrestrialGains& g) {
  const Vec3 e = sp.p_d - rs.p_hat;
  const double vx = sp.v_d.x() + g.K_p * e.x();
  const double vy = sp.v_d.y() + g.K_p * e.y();
  const double V = std::hypot(vx, vy);
  const double f = g.K_thr * (V - g.fit_intercept) / g.fit_slope;
  if (!(f > 0.0)) return 0.0;  // also maps NaN to zero
  return std::min(f, g.f_thr_crawl_max);
}

ControlCommand terrestrial_track(const Setpoint& sp, const RobotState& rs,
                                 const TerrestrialGains& g) {
  ControlCommand cmd;
  cmd.f_thr = throttle_cmd(sp, rs, g);
  cmd.body_rates = Vec3(0.0, 0.0, yaw_rate_cmd(sp, rs, g));
  return cmd;
}

Eigen::Matrix3d rotation_from_euler(const Vec3& theta) {
  return (Eigen::AngleAxisd(theta.z(), Vec3::UnitZ()) *
          Eigen::AngleAxisd(theta.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(theta.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

Vec3 euler_from_rotation(const Eigen::Matrix3d& R) {
  const double pitch = std::asin(std::clamp(-R(2, 0), -1.0, 1.0));
  const double roll = std::atan2(R(2, 1), R(2, 2));
  const double yaw = std::atan2(R(1, 0), R(0, 0));
  return {roll, pitch, wrap_angle(yaw)};
}

Vec3 rotation_log(const Eigen::Matrix3d& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

ControlCommand aerial_track(const Setpoint& sp, const RobotState& rs, const AerialGains& g) {
  // Position control.
  const Vec3 a = g.kp.cwiseProduct(sp.p_d - rs.p_hat) + g.kv.cwiseProduct(sp.v_d - rs.v_hat) +
                 sp.a_d + Vec3(0.0, 0.0, kGravity);

  // Thrust control: project onto the current body z axis.
  const Eigen::Matrix3d R = rotation_from_euler(rs.theta_hat);
  ControlCommand cmd;
  cmd.f_thr = std::clamp(g.hover_throttle * a.dot(R.col(2)) / kGravity, 0.0, 1.0);

  // Attitude calculation.
  const Vec3 b3 = a.norm() > 1e-9 ? Vec3(a.normalized()) : Vec3::UnitZ();
  const Vec3 heading(std::cos(sp.yaw_d), std::sin(sp.yaw_d), 0.0);
  Vec3 b2 = b3.cross(heading);
  if (b2.norm() < 1e-9) b2 = R.col(1);
  b2.normalize();
  const Vec3 b1 = b2.cross(b3);
  Eigen::Matrix3d Rd;
  Rd.col(0) = b1;
  Rd.col(1) = b2;
  Rd.col(2) = b3;

  // Attitude control.
  cmd.body_rates = g.k_att * rotation_log(R.transpose() * Rd);
  return cmd;
}

}  // namespace hybridnav
