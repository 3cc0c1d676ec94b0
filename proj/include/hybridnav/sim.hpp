#pragma once

#include "hybridnav/mission.hpp"
#include "hybridnav/search.hpp"
#include "hybridnav/tracking.hpp"
#include "hybridnav/trajectory.hpp"
#include "hybridnav/voxel_map.hpp"

#include <Eigen/Core>

#include <ostream>
#include <string>
#include <vector>

namespace hybridnav {

enum class Morphology { Wheels, Rotors, Deforming };

struct PlantState {
  RobotState rs;
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();  // body to world
  Vec3 omega = Vec3::Zero();                         // body rates actually achieved
  bool on_ground = true;
  Morphology morphology = Morphology::Wheels;
};

struct SimConfig {
  double dt = 1e-3;
  double fit_slope = 6.838;
  double fit_intercept = 0.0016;
  double hover_throttle = 0.5;
  double gravity = kGravity;
  double rate_bandwidth = 20.0;
  /// Smallest crawl turning radius; the yaw rate is limited to V / R. Zero disables.
  double min_turn_radius = 0.25;
  double control_period = 0.01;
  double timeout = 300.0;

  void validate() const;
};

/// Plant at rest in the given state; on the ground with wheels when z <= 0.
PlantState make_plant(const KinoState& s);

PlantState step_crawl(const PlantState& ps, const ControlCommand& cmd, double dt,
                      const SimConfig& cfg);
PlantState step_fly(const PlantState& ps, const ControlCommand& cmd, double dt,
                    const SimConfig& cfg);

PlantState begin_deform(const PlantState& ps);
/// The only way the locomotion morphology changes.
PlantState finish_deform(const PlantState& ps, Morphology target);

struct ClosedLoopConfig {
  SearchConfig planner;
  TerrestrialGains terrestrial;
  AerialGains aerial;
  MissionConfig mission;
  SimConfig sim;
  bool smooth = true;
  SmoothConfig smoothing;
};

struct LogRow {
  double t = 0.0;
  MissionPhase phase = MissionPhase::Crawling;
  ActionKind action = ActionKind::TrackTerrestrial;
  bool has_ref = false;
  Setpoint ref;
  RobotState act;
  ControlCommand cmd;
};

struct RunEvent {
  double t = 0.0;
  std::string kind;  // "mode", "replan" or "done"
  std::string from;
  std::string to;
  int primitives = 0;  // replan: size of the new plan
};

struct RunLog {
  std::vector<LogRow> rows;
  std::vector<RunEvent> events;
  std::vector<SearchStats> plan_stats;
  RobotState final_state;
  double end_time = 0.0;
  bool done = false;
};

class RunTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Plans, tracks and switches modes until every goal is reached in order.
/// Throws PlanError when a (re)plan fails and RunTimeout past cfg.sim.timeout.
RunLog run_closed_loop(const KinoState& start, const std::vector<Vec3>& goals,
                       const VoxelMap& map, const ClosedLoopConfig& cfg);

/// Crawl-mode tracking of a fixed reference, starting on its first setpoint.
RunLog track_reference(const Trajectory& ref, const TerrestrialGains& gains,
                       const SimConfig& cfg);

/// Plan and convert to a trajectory, smoothing when enabled. An empty plan
/// (start already at the goal) yields a stationary trajectory.
Trajectory plan_trajectory(const KinoState& from, const Vec3& goal, const VoxelMap& map,
                           const ClosedLoopConfig& cfg, SearchStats* stats = nullptr);

/// Metrics over the rows where a trajectory was being tracked.
TrackingMetrics run_metrics(const RunLog& log);

void write_run_csv(std::ostream& out, const RunLog& log);
void write_events_jsonl(std::ostream& out, const RunLog& log);

}  // namespace hybridnav
