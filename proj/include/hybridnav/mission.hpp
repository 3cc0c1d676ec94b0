#pragma once

#include "hybridnav/robot_state.hpp"
#include "hybridnav/trajectory.hpp"

#include <string_view>
#include <utility>

namespace hybridnav {

enum class MissionPhase {
  Crawling,
  CrawlToFlyDeform,
  TakingOff,
  Flying,
  Landing,
  FlyToCrawlDeform,
  Done,
};

std::string_view phase_name(MissionPhase phase);

struct MissionMode {
  MissionPhase phase = MissionPhase::Crawling;
  double phase_start = 0.0;
  double deform_elapsed = 0.0;
  double traj_start = 0.0;      // mission time of the active trajectory's t = 0
  bool awaiting_replan = false;
  Vec3 hold_point = Vec3::Zero();
  double hold_yaw = 0.0;
};

struct MissionConfig {
  double z_threshold = 0.3;
  double deform_duration = 2.0;
  double takeoff_altitude = 0.8;
  double takeoff_tolerance = 0.05;
  double landing_descent_rate = 0.3;
  double goal_tolerance = 0.2;
  double tick = 0.01;             // spacing of the consecutive setpoints compared
  double contact_height = 0.02;   // ground contact: z below this
  double contact_speed = 0.05;    // and |v_z| below this

  void validate() const;
};

enum class Transition { None, GroundToAir, AirToGround };

Transition detect_transition(double z_i, double z_next, double z_threshold);

enum class ActionKind {
  TrackTerrestrial,
  TrackAerial,
  HoldDeform,
  CommandTakeoff,
  CommandLand,
  RequestReplan,
  AwaitPlan,  // replan outstanding; hover or stand at the hold point
  Done,
};

std::string_view action_name(ActionKind kind);

struct MissionAction {
  ActionKind kind = ActionKind::TrackTerrestrial;
  Setpoint setpoint;             // tracking, take-off, landing and await actions
  double target_altitude = 0.0;  // CommandTakeoff
  KinoState replan_from;         // RequestReplan
  Vec3 goal = Vec3::Zero();      // RequestReplan
};

/// Initial mode for a mission whose first trajectory starts now.
MissionMode initial_mode(const RobotState& rs, double now, const MissionConfig& cfg);

/// One decision tick. Returns the action and the next mode.
std::pair<MissionAction, MissionMode> step(double now, const Trajectory& traj,
                                           const RobotState& rs, const MissionMode& mode,
                                           const Vec3& goal, const MissionConfig& cfg);

/// Accepts the trajectory answering a RequestReplan; it starts at `now`.
MissionMode replan_delivered(const MissionMode& mode, double now);

}  // namespace hybridnav
