#include "hybridnav/sim.hpp"

#include <Eigen/Geometry>
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

namespace hybridnav {

namespace {

Eigen::Matrix3d yaw_only(double yaw) {
  return Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
}

/// Euler-angle rates for body rates with R = Rz Ry Rx.
Vec3 euler_rates(const Vec3& theta, const Vec3& w) {
  const double sr = std::sin(theta.x()), cr = std::cos(theta.x());
  const double cp = std::cos(theta.y()), tp = std::tan(theta.y());
  return {w.x() + sr * tp * w.y() + cr * tp * w.z(), cr * w.y() - sr * w.z(),
          (sr * w.y() + cr * w.z()) / cp};
}

void sync_state(PlantState& ps) {
  ps.rs.theta_hat = euler_from_rotation(ps.R);
  ps.rs.theta_dot_hat = euler_rates(ps.rs.theta_hat, ps.omega);
}

void settle_on_ground(PlantState& ps) {
  ps.rs.p_hat.z() = 0.0;
  ps.rs.v_hat.setZero();
  ps.R = yaw_only(euler_from_rotation(ps.R).z());
  ps.omega.setZero();
  ps.on_ground = true;
  sync_state(ps);
}

Morphology morphology_for(MissionPhase phase, Morphology current) {
  switch (phase) {
    case MissionPhase::Crawling: return Morphology::Wheels;
    case MissionPhase::CrawlToFlyDeform:
    case MissionPhase::FlyToCrawlDeform: return Morphology::Deforming;
    case MissionPhase::TakingOff:
    case MissionPhase::Flying:
    case MissionPhase::Landing: return Morphology::Rotors;
    case MissionPhase::Done: return current;
  }
  return current;
}

Trajectory hold_trajectory(const KinoState& s, double z_threshold) {
  TrajectorySegment seg;
  seg.poly.coeffs.col(0) = s.p;
  seg.poly.duration = 1.0;
  seg.yaw_mode = YawMode::Constant;
  seg.yaw_hold = s.yaw;
  return Trajectory({seg}, z_threshold);
}

void write_num(std::ostream& out, double v) {
  if (std::isnan(v))
    out << "nan";
  else
    out << v;
}

}  // namespace

void SimConfig::validate() const {
  if (!(dt > 0 && control_period >= dt && timeout > 0 && rate_bandwidth > 0 && fit_slope > 0))
    throw InputError("sim: dt, control_period, timeout, bandwidth and slope must be positive");
  if (!(hover_throttle > 0 && hover_throttle < 1))
    throw InputError("sim: hover_throttle must be in (0, 1)");
  if (min_turn_radius < 0) throw InputError("sim: min_turn_radius must be >= 0");
}

PlantState make_plant(const KinoState& s) {
  PlantState ps;
  ps.rs.p_hat = s.p;
  ps.R = yaw_only(s.yaw);
  ps.on_ground = s.p.z() <= 0.0;
  ps.morphology = ps.on_ground ? Morphology::Wheels : Morphology::Rotors;
  if (ps.on_ground) ps.rs.p_hat.z() = 0.0;
  sync_state(ps);
  ps.rs.theta_hat.z() = wrap_angle(s.yaw);
  return ps;
}

PlantState step_crawl(const PlantState& ps, const ControlCommand& cmd, double dt,
                      const SimConfig& cfg) {
  PlantState out = ps;
  const double f = std::clamp(cmd.f_thr, 0.0, 1.0);
  const double V = f > 0.0 ? cfg.fit_slope * f + cfg.fit_intercept : 0.0;
  double w = cmd.body_rates.z();
  if (cfg.min_turn_radius > 0.0) {
    const double w_max = V / cfg.min_turn_radius;
    w = std::clamp(w, -w_max, w_max);
  }
  const double yaw0 = ps.rs.yaw();
  const double mid = yaw0 + 0.5 * w * dt;
  out.rs.p_hat.x() += V * dt * std::cos(mid);
  out.rs.p_hat.y() += V * dt * std::sin(mid);
  out.rs.p_hat.z() = 0.0;
  const double yaw = wrap_angle(yaw0 + w * dt);
  out.rs.v_hat = Vec3(V * std::cos(yaw), V * std::sin(yaw), 0.0);
  out.rs.theta_hat = Vec3(0.0, 0.0, yaw);
  out.rs.theta_dot_hat = Vec3(0.0, 0.0, w);
  out.R = yaw_only(yaw);
  out.omega = Vec3(0.0, 0.0, w);
  out.on_ground = true;
  return out;
}

PlantState step_fly(const PlantState& ps, const ControlCommand& cmd, double dt,
                    const SimConfig& cfg) {
  PlantState out = ps;
  const double k = 1.0 - std::exp(-cfg.rate_bandwidth * dt);
  out.omega += k * (cmd.body_rates - out.omega);
  const double angle = out.omega.norm() * dt;
  if (angle > 0.0) {
    out.R = out.R * Eigen::AngleAxisd(angle, out.omega.normalized()).toRotationMatrix();
    out.R = Eigen::Quaterniond(out.R).normalized().toRotationMatrix();
  }
  const double f = std::clamp(cmd.f_thr, 0.0, 1.0);
  const Vec3 acc =
      (cfg.gravity * f / cfg.hover_throttle) * out.R.col(2) - Vec3(0.0, 0.0, cfg.gravity);
  out.rs.v_hat += acc * dt;
  out.rs.p_hat += out.rs.v_hat * dt;
  if (out.rs.p_hat.z() <= 0.0 && out.rs.v_hat.z() <= 0.0) {
    settle_on_ground(out);
    return out;
  }
  out.on_ground = false;
  sync_state(out);
  return out;
}

PlantState begin_deform(const PlantState& ps) {
  PlantState out = ps;
  out.morphology = Morphology::Deforming;
  out.rs.v_hat.setZero();
  out.omega.setZero();
  sync_state(out);
  return out;
}

PlantState finish_deform(const PlantState& ps, Morphology target) {
  PlantState out = ps;
  out.morphology = target;
  if (target == Morphology::Wheels) settle_on_ground(out);
  return out;
}

Trajectory plan_trajectory(const KinoState& from, const Vec3& goal, const VoxelMap& map,
                           const ClosedLoopConfig& cfg, SearchStats* stats) {
  const PlanResult result = plan(from, goal, map, cfg.planner);
  if (stats) *stats = result.stats;
  if (result.primitives.empty() && !result.analytic_tail)
    return hold_trajectory(from, cfg.planner.z_threshold);
  Trajectory traj = from_plan(result);
  if (cfg.smooth) {
    try {
      traj = smooth(traj, map, cfg.smoothing);
    } catch (const SmoothingRejected&) {
      // keep the raw search trajectory
    }
  }
  return traj;
}

RunLog run_closed_loop(const KinoState& start, const std::vector<Vec3>& goals,
                       const VoxelMap& map, const ClosedLoopConfig& cfg) {
  if (goals.empty()) throw InputError("closed loop run needs at least one goal");
  cfg.sim.validate();
  cfg.mission.validate();
  cfg.terrestrial.validate();
  cfg.aerial.validate();

  RunLog log;
  PlantState plant = make_plant(start);
  const double tick = cfg.sim.control_period;
  const int substeps = std::max(1, static_cast<int>(std::lround(tick / cfg.sim.dt)));
  const double dt = tick / substeps;

  auto replan = [&](const KinoState& from, const Vec3& goal, double t) {
    SearchStats stats;
    Trajectory traj = plan_trajectory(from, goal, map, cfg, &stats);
    log.plan_stats.push_back(stats);
    RunEvent ev;
    ev.t = t;
    ev.kind = "replan";
    ev.primitives = static_cast<int>(traj.segments().size());
    log.events.push_back(ev);
    return traj;
  };

  std::size_t goal_index = 0;
  Trajectory traj = replan(start, goals[0], 0.0);
  MissionMode mode = initial_mode(plant.rs, 0.0, cfg.mission);

  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * tick;
    if (t > cfg.sim.timeout) throw RunTimeout("closed loop run exceeded the timeout");
    const Vec3& goal = goals[goal_index];

    auto [act, next] = step(t, traj, plant.rs, mode, goal, cfg.mission);
    if (act.kind == ActionKind::RequestReplan) {
      traj = replan(act.replan_from, act.goal, t);
      next = replan_delivered(next, t);
      std::tie(act, next) = step(t, traj, plant.rs, next, goal, cfg.mission);
    }
    if (next.phase != mode.phase) {
      RunEvent ev;
      ev.t = t;
      ev.kind = "mode";
      ev.from = phase_name(mode.phase);
      ev.to = phase_name(next.phase);
      log.events.push_back(ev);
    }
    mode = next;

    if (act.kind == ActionKind::Done) {
      RunEvent ev;
      ev.t = t;
      ev.kind = "done";
      log.events.push_back(ev);
      if (++goal_index < goals.size()) {
        KinoState from{plant.rs.p_hat, plant.rs.v_hat, plant.rs.yaw()};
        traj = replan(from, goals[goal_index], t);
        mode = initial_mode(plant.rs, t, cfg.mission);
        continue;
      }
      log.done = true;
      log.end_time = t;
      break;
    }

    const Morphology want = morphology_for(mode.phase, plant.morphology);
    if (want != plant.morphology) {
      if (want == Morphology::Deforming)
        plant = begin_deform(plant);
      else
        plant = finish_deform(plant, want);
    }

    ControlCommand cmd;
    const bool has_ref = act.kind != ActionKind::HoldDeform;
    if (plant.morphology == Morphology::Wheels && act.kind == ActionKind::TrackTerrestrial) {
      cmd = terrestrial_track(act.setpoint, plant.rs, cfg.terrestrial);
    } else if (plant.morphology == Morphology::Rotors) {
      cmd = aerial_track(act.setpoint, plant.rs, cfg.aerial);
    }

    LogRow row;
    row.t = t;
    row.phase = mode.phase;
    row.action = act.kind;
    row.has_ref = has_ref;
    row.ref = act.setpoint;
    row.act = plant.rs;
    row.cmd = cmd;
    log.rows.push_back(row);

    for (int i = 0; i < substeps; ++i) {
      if (plant.morphology == Morphology::Wheels)
        plant = step_crawl(plant, cmd, dt, cfg.sim);
      else if (plant.morphology == Morphology::Rotors)
        plant = step_fly(plant, cmd, dt, cfg.sim);
    }
  }
  log.final_state = plant.rs;
  return log;
}

RunLog track_reference(const Trajectory& ref, const TerrestrialGains& gains,
                       const SimConfig& cfg) {
  if (ref.empty()) throw InputError("reference trajectory is empty");
  cfg.validate();
  gains.validate();
  const Setpoint first = sample(ref, 0.0);
  PlantState plant = make_plant({first.p_d, Vec3::Zero(), first.yaw_d});
  plant = finish_deform(plant, Morphology::Wheels);

  const double tick = cfg.control_period;
  const int substeps = std::max(1, static_cast<int>(std::lround(tick / cfg.dt)));
  const double dt = tick / substeps;
  const auto n = static_cast<long>(std::floor(ref.total_duration() / tick + 1e-9));

  RunLog log;
  for (long k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * tick;
    LogRow row;
    row.t = t;
    row.phase = MissionPhase::Crawling;
    row.action = ActionKind::TrackTerrestrial;
    row.has_ref = true;
    row.ref = sample(ref, t);
    row.act = plant.rs;
    row.cmd = terrestrial_track(row.ref, plant.rs, gains);
    log.rows.push_back(row);
    for (int i = 0; i < substeps; ++i) plant = step_crawl(plant, row.cmd, dt, cfg);
  }
  log.final_state = plant.rs;
  log.end_time = static_cast<double>(n) * tick;
  log.done = true;
  return log;
}

TrackingMetrics run_metrics(const RunLog& log) {
  std::vector<Setpoint> ref;
  std::vector<RobotState> act;
  for (const auto& row : log.rows) {
    if (!row.has_ref) continue;
    if (row.action != ActionKind::TrackTerrestrial && row.action != ActionKind::TrackAerial)
      continue;
    ref.push_back(row.ref);
    act.push_back(row.act);
  }
  return metrics(ref, act);
}

void write_run_csv(std::ostream& out, const RunLog& log) {
  out << "t,mode,ref_px,ref_py,ref_pz,ref_vx,ref_vy,ref_vz,ref_yaw,"
         "act_px,act_py,act_pz,act_vx,act_vy,act_vz,act_yaw,f_thr,wx,wy,wz\n";
  out << std::setprecision(12);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& row : log.rows) {
    out << row.t << ',' << phase_name(row.phase);
    const Setpoint& r = row.ref;
    const double ref_vals[] = {r.p_d.x(), r.p_d.y(), r.p_d.z(), r.v_d.x(),
                               r.v_d.y(), r.v_d.z(), r.yaw_d};
    for (double v : ref_vals) {
      out << ',';
      write_num(out, row.has_ref ? v : nan);
    }
    const RobotState& a = row.act;
    const double act_vals[] = {a.p_hat.x(), a.p_hat.y(), a.p_hat.z(), a.v_hat.x(),
                               a.v_hat.y(), a.v_hat.z(), a.yaw(),     row.cmd.f_thr,
                               row.cmd.body_rates.x(), row.cmd.body_rates.y(),
                               row.cmd.body_rates.z()};
    for (double v : act_vals) {
      out << ',';
      write_num(out, v);
    }
    out << '\n';
  }
}

void write_events_jsonl(std::ostream& out, const RunLog& log) {
  for (const auto& ev : log.events) {
    nlohmann::json j;
    j["t"] = ev.t;
    j["event"] = ev.kind;
    if (ev.kind == "mode") {
      j["from"] = ev.from;
      j["to"] = ev.to;
    } else if (ev.kind == "replan") {
      j["segments"] = ev.primitives;
    }
    out << j.dump() << '\n';
  }
}

}  // namespace hybridnav
