#pragma once

#include "hybridnav/robot_state.hpp"
#include "hybridnav/search.hpp"
#include "hybridnav/voxel_map.hpp"

#include <ostream>
#include <span>
#include <vector>

namespace hybridnav {

enum class YawMode {
  Tangent,   // heading of the horizontal velocity, holding the last yaw near rest
  Constant,  // fixed heading
};

struct TrajectorySegment {
  double t0 = 0.0;
  PolySegment poly;
  YawMode yaw_mode = YawMode::Tangent;
  double yaw_hold = 0.0;  // Tangent: yaw used when the velocity vanishes; Constant: the yaw

  [[nodiscard]] double duration() const { return poly.duration; }
  [[nodiscard]] double yaw_at(double local_t) const;
};

struct Setpoint {
  Vec3 p_d = Vec3::Zero();
  Vec3 v_d = Vec3::Zero();
  Vec3 a_d = Vec3::Zero();
  double yaw_d = 0.0;
  MotionMode mode_hint = MotionMode::Terrestrial;
};

class TrajectoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Piecewise-cubic reference, C1 across segment boundaries.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(std::vector<TrajectorySegment> segments, double z_threshold);

  [[nodiscard]] const std::vector<TrajectorySegment>& segments() const { return segments_; }
  [[nodiscard]] double total_duration() const;
  [[nodiscard]] double z_threshold() const { return z_threshold_; }
  [[nodiscard]] bool empty() const { return segments_.empty(); }

  /// Integral of |a|^2 over the whole trajectory.
  [[nodiscard]] double acceleration_energy() const;

  /// Recomputes the hold yaw of tangent segments by chaining from `start_yaw`.
  void rechain_yaw(double start_yaw);

 private:
  std::vector<TrajectorySegment> segments_;
  double z_threshold_ = 0.0;
};

/// One quadratic segment per primitive, plus the analytic tail.
Trajectory from_plan(const PlanResult& plan);

struct SmoothConfig {
  double v_max = 1.0;
  double a_max = 0.8;
  int max_iterations = 200;
  bool lock_z = true;  // keep every waypoint's z position and velocity
};

class SmoothingRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Descends the integrated squared acceleration over interior waypoint
/// positions and velocities (segment durations fixed). Iterates that collide or
/// break the dynamic limits are rejected.
Trajectory smooth(const Trajectory& traj, const VoxelMap& map, const SmoothConfig& cfg);

/// Collision and limit check by dense resampling.
bool trajectory_valid(const Trajectory& traj, const VoxelMap& map, double v_max, double a_max);

Setpoint sample(const Trajectory& traj, double t);

struct TrackingMetrics {
  double E_ap = 0.0;
  double E_mp = 0.0;
  double E_ay = 0.0;
  double E_my = 0.0;
};

TrackingMetrics metrics(std::span<const Setpoint> reference, std::span<const RobotState> actual);

/// Columns t,px,py,pz,vx,vy,vz,ax,ay,az,yaw at a fixed step, end inclusive.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, double step);

}  // namespace hybridnav
