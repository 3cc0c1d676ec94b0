#include "hybridnav/mission.hpp"

#include <algorithm>

namespace hybridnav {

namespace {

Setpoint hold_setpoint(const Vec3& p, double yaw, MotionMode hint) {
  Setpoint sp;
  sp.p_d = p;
  sp.yaw_d = yaw;
  sp.mode_hint = hint;
  return sp;
}

MissionMode enter(const MissionMode& mode, MissionPhase phase, double now) {
  MissionMode next = mode;
  next.phase = phase;
  next.phase_start = now;
  next.deform_elapsed = 0.0;
  return next;
}

KinoState state_of(const RobotState& rs, bool keep_velocity) {
  KinoState s;
  s.p = rs.p_hat;
  s.v = keep_velocity ? rs.v_hat : Vec3::Zero();
  s.yaw = rs.yaw();
  return s;
}

}  // namespace

std::string_view phase_name(MissionPhase phase) {
  switch (phase) {
    case MissionPhase::Crawling: return "Crawling";
    case MissionPhase::CrawlToFlyDeform: return "CrawlToFlyDeform";
    case MissionPhase::TakingOff: return "TakingOff";
    case MissionPhase::Flying: return "Flying";
    case MissionPhase::Landing: return "Landing";
    case MissionPhase::FlyToCrawlDeform: return "FlyToCrawlDeform";
    case MissionPhase::Done: return "Done";
  }
  return "?";
}

std::string_view action_name(ActionKind kind) {
  switch (kind) {
    case ActionKind::TrackTerrestrial: return "TrackTerrestrial";
    case ActionKind::TrackAerial: return "TrackAerial";
    case ActionKind::HoldDeform: return "HoldDeform";
    case ActionKind::CommandTakeoff: return "CommandTakeoff";
    case ActionKind::CommandLand: return "CommandLand";
    case ActionKind::RequestReplan: return "RequestReplan";
    case ActionKind::AwaitPlan: return "AwaitPlan";
    case ActionKind::Done: return "Done";
  }
  return "?";
}

void MissionConfig::validate() const {
  if (!(z_threshold > 0 && deform_duration > 0 && takeoff_altitude > 0 && takeoff_tolerance > 0 &&
        landing_descent_rate > 0 && goal_tolerance > 0 && tick > 0 && contact_height > 0 &&
        contact_speed > 0))
    throw InputError("mission parameters must be positive");
  if (takeoff_altitude <= z_threshold)
    throw InputError("takeoff_altitude must be above z_threshold");
}

Transition detect_transition(double z_i, double z_next, double z_threshold) {
  if (z_i < z_threshold && z_next >= z_threshold) return Transition::GroundToAir;
  if (z_i >= z_threshold && z_next < z_threshold) return Transition::AirToGround;
  return Transition::None;
}

MissionMode initial_mode(const RobotState& rs, double now, const MissionConfig& cfg) {
  MissionMode mode;
  mode.phase = rs.p_hat.z() >= cfg.z_threshold ? MissionPhase::Flying : MissionPhase::Crawling;
  mode.phase_start = now;
  mode.traj_start = now;
  mode.hold_point = rs.p_hat;
  mode.hold_yaw = rs.yaw();
  return mode;
}

MissionMode replan_delivered(const MissionMode& mode, double now) {
  MissionMode next = mode;
  next.awaiting_replan = false;
  next.traj_start = now;
  if (mode.phase == MissionPhase::TakingOff) next = enter(next, MissionPhase::Flying, now);
  if (mode.phase == MissionPhase::FlyToCrawlDeform) next = enter(next, MissionPhase::Crawling, now);
  return next;
}

std::pair<MissionAction, MissionMode> step(double now, const Trajectory& traj,
                                           const RobotState& rs, const MissionMode& mode,
                                           const Vec3& goal, const MissionConfig& cfg) {
  MissionAction act;
  MissionMode next = mode;
  const bool at_goal = (rs.p_hat - goal).norm() < cfg.goal_tolerance;

  auto done = [&]() {
    act.kind = ActionKind::Done;
    next = enter(mode, MissionPhase::Done, now);
    return std::pair{act, next};
  };
  auto request_replan = [&](bool keep_velocity) {
    act.kind = ActionKind::RequestReplan;
    act.replan_from = state_of(rs, keep_velocity);
    act.goal = goal;
    next.awaiting_replan = true;
    return std::pair{act, next};
  };
  auto await_plan = [&](MotionMode hint) {
    act.kind = ActionKind::AwaitPlan;
    act.setpoint = hold_setpoint(mode.hold_point, mode.hold_yaw, hint);
    return std::pair{act, next};
  };

  switch (mode.phase) {
    case MissionPhase::Done:
      return done();

    case MissionPhase::Crawling:
    case MissionPhase::Flying: {
      if (at_goal) return done();
      const bool ground = mode.phase == MissionPhase::Crawling;
      const double t = now - mode.traj_start;
      const Setpoint sp = sample(traj, t);
      const Setpoint sp_next = sample(traj, t + cfg.tick);
      const Transition tr = detect_transition(sp.p_d.z(), sp_next.p_d.z(), cfg.z_threshold);
      const double thr = cfg.z_threshold;
      if (ground && (tr == Transition::GroundToAir || sp.p_d.z() >= thr)) {
        next = enter(mode, MissionPhase::CrawlToFlyDeform, now);
        next.hold_point = rs.p_hat;
        next.hold_yaw = rs.yaw();
        act.kind = ActionKind::HoldDeform;
        return {act, next};
      }
      if (!ground && (tr == Transition::AirToGround || sp.p_d.z() < thr)) {
        next = enter(mode, MissionPhase::Landing, now);
        next.hold_point = rs.p_hat;
        next.hold_yaw = rs.yaw();
        act.kind = ActionKind::CommandLand;
        act.setpoint = hold_setpoint(rs.p_hat, rs.yaw(), MotionMode::Aerial);
        act.setpoint.v_d = Vec3(0.0, 0.0, -cfg.landing_descent_rate);
        return {act, next};
      }
      act.kind = ground ? ActionKind::TrackTerrestrial : ActionKind::TrackAerial;
      act.setpoint = sp;
      return {act, next};
    }

    case MissionPhase::CrawlToFlyDeform:
    case MissionPhase::FlyToCrawlDeform: {
      next.deform_elapsed = std::min(now - mode.phase_start, cfg.deform_duration);
      const bool to_fly = mode.phase == MissionPhase::CrawlToFlyDeform;
      if (mode.awaiting_replan) return await_plan(MotionMode::Terrestrial);
      if (next.deform_elapsed < cfg.deform_duration) {
        act.kind = ActionKind::HoldDeform;
        return {act, next};
      }
      if (to_fly) {
        next = enter(mode, MissionPhase::TakingOff, now);
        act.kind = ActionKind::CommandTakeoff;
        act.target_altitude = cfg.takeoff_altitude;
        Vec3 target = mode.hold_point;
        target.z() = cfg.takeoff_altitude;
        act.setpoint = hold_setpoint(target, mode.hold_yaw, MotionMode::Aerial);
        return {act, next};
      }
      if (at_goal) return done();
      return request_replan(false);
    }

    case MissionPhase::TakingOff: {
      Vec3 target = mode.hold_point;
      target.z() = cfg.takeoff_altitude;
      if (mode.awaiting_replan) {
        next.hold_point = target;
        return await_plan(MotionMode::Aerial);
      }
      if (std::abs(rs.p_hat.z() - cfg.takeoff_altitude) < cfg.takeoff_tolerance) {
        next.hold_point = target;
        return request_replan(true);
      }
      act.kind = ActionKind::CommandTakeoff;
      act.target_altitude = cfg.takeoff_altitude;
      act.setpoint = hold_setpoint(target, mode.hold_yaw, MotionMode::Aerial);
      return {act, next};
    }

    case MissionPhase::Landing: {
      if (rs.p_hat.z() < cfg.contact_height && std::abs(rs.v_hat.z()) < cfg.contact_speed) {
        next = enter(mode, MissionPhase::FlyToCrawlDeform, now);
        next.hold_point = rs.p_hat;
        next.hold_yaw = rs.yaw();
        act.kind = ActionKind::HoldDeform;
        return {act, next};
      }
      act.kind = ActionKind::CommandLand;
      Vec3 p = mode.hold_point;
      p.z() = rs.p_hat.z();
      act.setpoint = hold_setpoint(p, mode.hold_yaw, MotionMode::Aerial);
      act.setpoint.v_d = Vec3(0.0, 0.0, -cfg.landing_descent_rate);
      return {act, next};
    }
  }
  return {act, next};
}

}  // namespace hybridnav
