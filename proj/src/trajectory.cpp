#include "hybridnav/trajectory.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <iomanip>

namespace hybridnav {

namespace {

constexpr double kRestSpeed = 1e-6;

double horizontal_heading(const Vec3& d, double fallback) {
  if (std::hypot(d.x(), d.y()) < 1e-9) return fallback;
  return wrap_angle(std::atan2(d.y(), d.x()));
}

/// Hermite control energy matrix: int |x''|^2 = q^T Q q, q = (p0, v0, p1, v1).
Eigen::Matrix4d hermite_energy_matrix(double T) {
  Eigen::Matrix4d Q;
  const double T2 = T * T;
  Q << 12.0, 6.0 * T, -12.0, 6.0 * T,        //
      6.0 * T, 4.0 * T2, -6.0 * T, 2.0 * T2,  //
      -12.0, -6.0 * T, 12.0, -6.0 * T,        //
      6.0 * T, 2.0 * T2, -6.0 * T, 4.0 * T2;
  return Q / (T2 * T);
}

PolySegment hermite(const Vec3& p0, const Vec3& v0, const Vec3& p1, const Vec3& v1, double T) {
  PolySegment s;
  s.duration = T;
  const Vec3 d = p1 - p0;
  s.coeffs.col(0) = p0;
  s.coeffs.col(1) = v0;
  s.coeffs.col(2) = (3.0 * d - (2.0 * v0 + v1) * T) / (T * T);
  s.coeffs.col(3) = (-2.0 * d + (v0 + v1) * T) / (T * T * T);
  return s;
}

}  // namespace

double TrajectorySegment::yaw_at(double t) const {
  if (yaw_mode == YawMode::Constant) return yaw_hold;
  const Vec3 v = poly.velocity(t);
  if (std::hypot(v.x(), v.y()) >= kRestSpeed) return wrap_angle(std::atan2(v.y(), v.x()));
  // Near rest the direction of motion is the acceleration leaving rest, or its
  // negative when coming to rest at the end of the segment.
  const Vec3 a = poly.acceleration(t);
  return horizontal_heading(t < 0.5 * poly.duration ? a : Vec3(-a), yaw_hold);
}

Trajectory::Trajectory(std::vector<TrajectorySegment> segments, double z_threshold)
    : segments_(std::move(segments)), z_threshold_(z_threshold) {
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (!(s.duration() > 0.0)) throw TrajectoryError("segment duration must be positive");
    if (i == 0) continue;
    const auto& prev = segments_[i - 1];
    if (std::abs(prev.t0 + prev.duration() - s.t0) > 1e-9 * std::max(1.0, s.t0))
      throw TrajectoryError("segment start times are not contiguous");
    if ((prev.poly.position(prev.duration()) - s.poly.position(0.0)).norm() > 1e-6)
      throw TrajectoryError("position discontinuity at segment " + std::to_string(i));
    if ((prev.poly.velocity(prev.duration()) - s.poly.velocity(0.0)).norm() > 1e-6)
      throw TrajectoryError("velocity discontinuity at segment " + std::to_string(i));
  }
}

double Trajectory::total_duration() const {
  if (segments_.empty()) return 0.0;
  return segments_.back().t0 + segments_.back().duration();
}

double Trajectory::acceleration_energy() const {
  double e = 0.0;
  for (const auto& s : segments_) e += s.poly.acceleration_energy();
  return e;
}

void Trajectory::rechain_yaw(double start_yaw) {
  double yaw = start_yaw;
  for (auto& s : segments_) {
    if (s.yaw_mode == YawMode::Tangent) s.yaw_hold = yaw;
    yaw = s.yaw_at(s.duration());
  }
}

Trajectory from_plan(const PlanResult& plan) {
  if (plan.primitives.empty() && !plan.analytic_tail)
    throw TrajectoryError("cannot build a trajectory from an empty plan");

  for (std::size_t i = 1; i < plan.primitives.size(); ++i) {
    const auto& a = plan.primitives[i - 1].end;
    const auto& b = plan.primitives[i].start;
    const double scale = std::max(1.0, a.p.norm());
    if ((a.p - b.p).norm() > 1e-9 * scale || (a.v - b.v).norm() > 1e-9 * scale)
      throw TrajectoryError("ChainBroken: primitive " + std::to_string(i) +
                            " does not start where the previous one ends");
  }

  std::vector<PolySegment> polys;
  for (const auto& prim : plan.primitives) {
    PolySegment s;
    s.duration = prim.input.tau;
    s.coeffs.col(0) = prim.start.p;
    s.coeffs.col(1) = prim.start.v;
    s.coeffs.col(2) = 0.5 * prim.u_world;
    polys.push_back(s);
  }
  if (plan.analytic_tail) polys.push_back(*plan.analytic_tail);

  // Goal-facing heading for the flight part, fixed from where it starts.
  std::optional<double> aerial_yaw;
  for (const auto& s : polys) {
    if (s.position(0.0).z() >= plan.z_threshold) {
      aerial_yaw = yaw_of_displacement(s.position(0.0), plan.goal);
      break;
    }
  }

  std::vector<TrajectorySegment> segs;
  double t0 = 0.0;
  double chain_yaw = plan.start.yaw;
  for (const auto& poly : polys) {
    TrajectorySegment seg;
    seg.t0 = t0;
    seg.poly = poly;
    if (poly.position(0.0).z() >= plan.z_threshold) {
      seg.yaw_mode = YawMode::Constant;
      seg.yaw_hold = aerial_yaw.value_or(chain_yaw);
    } else {
      seg.yaw_mode = YawMode::Tangent;
      seg.yaw_hold = chain_yaw;
    }
    chain_yaw = seg.yaw_at(seg.duration());
    t0 += poly.duration;
    segs.push_back(seg);
  }
  return Trajectory(std::move(segs), plan.z_threshold);
}

bool trajectory_valid(const Trajectory& traj, const VoxelMap& map, double v_max, double a_max) {
  const double step = 0.5 * map.resolution();
  const double dt = std::min(0.02, step / v_max);
  const double tol = 1e-9;
  for (const auto& seg : traj.segments()) {
    const auto& poly = seg.poly;
    if (poly.acceleration(0.0).cwiseAbs().maxCoeff() > a_max + tol) return false;
    if (poly.acceleration(poly.duration).cwiseAbs().maxCoeff() > a_max + tol) return false;
    const int n = std::max(2, static_cast<int>(std::ceil(poly.duration / dt)));
    Vec3 prev = poly.position(0.0);
    if (!map.is_free(prev) || poly.velocity(0.0).norm() > v_max + tol) return false;
    for (int i = 1; i <= n; ++i) {
      const double t = poly.duration * i / n;
      const Vec3 p = poly.position(t);
      if (poly.velocity(t).norm() > v_max + tol) return false;
      if (!map.segment_free(prev, p, step)) return false;
      prev = p;
    }
  }
  return true;
}

Trajectory smooth(const Trajectory& traj, const VoxelMap& map, const SmoothConfig& cfg) {
  if (traj.empty()) throw SmoothingRejected("empty trajectory");
  if (!trajectory_valid(traj, map, cfg.v_max, cfg.a_max))
    throw SmoothingRejected("input trajectory is not collision-free and within limits");

  const auto& in = traj.segments();
  const std::size_t n_seg = in.size();
  if (n_seg < 2) return traj;

  std::vector<double> durations(n_seg);
  std::vector<Vec3> P(n_seg + 1), V(n_seg + 1);
  for (std::size_t k = 0; k < n_seg; ++k) {
    durations[k] = in[k].duration();
    P[k] = in[k].poly.position(0.0);
    V[k] = in[k].poly.velocity(0.0);
  }
  P[n_seg] = in.back().poly.position(in.back().duration());
  V[n_seg] = in.back().poly.velocity(in.back().duration());

  std::vector<Eigen::Matrix4d> Q(n_seg);
  for (std::size_t k = 0; k < n_seg; ++k) Q[k] = hermite_energy_matrix(durations[k]);

  auto energy = [&](const std::vector<Vec3>& p, const std::vector<Vec3>& v) {
    double e = 0.0;
    for (std::size_t k = 0; k < n_seg; ++k)
      for (int ax = 0; ax < 3; ++ax) {
        const Eigen::Vector4d q(p[k][ax], v[k][ax], p[k + 1][ax], v[k + 1][ax]);
        e += q.dot(Q[k] * q);
      }
    return e;
  };

  auto build = [&](const std::vector<Vec3>& p, const std::vector<Vec3>& v) {
    std::vector<TrajectorySegment> segs = in;
    for (std::size_t k = 0; k < n_seg; ++k)
      segs[k].poly = hermite(p[k], v[k], p[k + 1], v[k + 1], durations[k]);
    Trajectory out(std::move(segs), traj.z_threshold());
    out.rechain_yaw(in.front().yaw_hold);
    return out;
  };

  // Diagonal of the Hessian for a Jacobi-preconditioned step.
  std::vector<Vec3> diag_p(n_seg + 1, Vec3::Zero()), diag_v(n_seg + 1, Vec3::Zero());
  for (std::size_t k = 0; k < n_seg; ++k) {
    diag_p[k] += Vec3::Constant(2.0 * Q[k](0, 0));
    diag_v[k] += Vec3::Constant(2.0 * Q[k](1, 1));
    diag_p[k + 1] += Vec3::Constant(2.0 * Q[k](2, 2));
    diag_v[k + 1] += Vec3::Constant(2.0 * Q[k](3, 3));
  }

  double e_cur = energy(P, V);
  Trajectory best = build(P, V);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    std::vector<Vec3> gp(n_seg + 1, Vec3::Zero()), gv(n_seg + 1, Vec3::Zero());
    for (std::size_t k = 0; k < n_seg; ++k)
      for (int ax = 0; ax < 3; ++ax) {
        const Eigen::Vector4d q(P[k][ax], V[k][ax], P[k + 1][ax], V[k + 1][ax]);
        const Eigen::Vector4d g = 2.0 * Q[k] * q;
        gp[k][ax] += g[0];
        gv[k][ax] += g[1];
        gp[k + 1][ax] += g[2];
        gv[k + 1][ax] += g[3];
      }

    bool accepted = false;
    for (double step = 1.0; step > 1e-4; step *= 0.5) {
      std::vector<Vec3> P2 = P, V2 = V;
      for (std::size_t k = 1; k < n_seg; ++k)
        for (int ax = 0; ax < 3; ++ax) {
          if (cfg.lock_z && ax == 2) continue;
          P2[k][ax] -= step * gp[k][ax] / diag_p[k][ax];
          V2[k][ax] -= step * gv[k][ax] / diag_v[k][ax];
        }
      const double e_new = energy(P2, V2);
      if (!(e_new < e_cur)) continue;
      Trajectory cand = build(P2, V2);
      if (!trajectory_valid(cand, map, cfg.v_max, cfg.a_max)) continue;
      const double gain = e_cur - e_new;
      P = std::move(P2);
      V = std::move(V2);
      e_cur = e_new;
      best = std::move(cand);
      accepted = true;
      if (gain < 1e-12 * std::max(1.0, e_cur)) it = cfg.max_iterations;
      break;
    }
    if (!accepted) break;
  }
  return best;
}

Setpoint sample(const Trajectory& traj, double t) {
  Setpoint sp;
  if (traj.empty()) return sp;
  const auto& segs = traj.segments();
  t = std::max(t, 0.0);
  if (t > traj.total_duration()) {
    const auto& last = segs.back();
    sp.p_d = last.poly.position(last.duration());
    sp.yaw_d = last.yaw_at(last.duration());
  } else {
    auto it = std::upper_bound(segs.begin(), segs.end(), t,
                               [](double v, const TrajectorySegment& s) { return v < s.t0; });
    const auto& seg = it == segs.begin() ? segs.front() : *std::prev(it);
    const double lt = std::clamp(t - seg.t0, 0.0, seg.duration());
    sp.p_d = seg.poly.position(lt);
    sp.v_d = seg.poly.velocity(lt);
    sp.a_d = seg.poly.acceleration(lt);
    sp.yaw_d = seg.yaw_at(lt);
  }
  sp.mode_hint = sp.p_d.z() >= traj.z_threshold() ? MotionMode::Aerial : MotionMode::Terrestrial;
  return sp;
}

TrackingMetrics metrics(std::span<const Setpoint> reference, std::span<const RobotState> actual) {
  if (reference.size() != actual.size())
    throw InputError("metrics: reference and actual sequences differ in length");
  TrackingMetrics m;
  if (reference.empty()) return m;
  double sum_p = 0.0, sum_y = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double ep = (reference[i].p_d - actual[i].p_hat).norm();
    const double ey = std::abs(angle_diff(reference[i].yaw_d, actual[i].yaw()));
    sum_p += ep;
    sum_y += ey;
    m.E_mp = std::max(m.E_mp, ep);
    m.E_my = std::max(m.E_my, ey);
  }
  m.E_ap = sum_p / static_cast<double>(reference.size());
  m.E_ay = sum_y / static_cast<double>(reference.size());
  return m;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, double step) {
  if (!(step > 0.0)) throw InputError("trajectory sample step must be positive");
  out << "t,px,py,pz,vx,vy,vz,ax,ay,az,yaw\n";
  out << std::setprecision(10);
  const double T = traj.total_duration();
  const auto n = static_cast<long>(std::floor(T / step + 1e-9));
  const bool tail = static_cast<double>(n) * step < T - 1e-9;
  for (long i = 0; i <= n + (tail ? 1 : 0); ++i) {
    const double t = std::min(static_cast<double>(i) * step, T);
    const Setpoint sp = sample(traj, t);
    out << t << ',' << sp.p_d.x() << ',' << sp.p_d.y() << ',' << sp.p_d.z() << ',' << sp.v_d.x()
        << ',' << sp.v_d.y() << ',' << sp.v_d.z() << ',' << sp.a_d.x() << ',' << sp.a_d.y() << ','
        << sp.a_d.z() << ',' << sp.yaw_d << '\n';
  }
}

}  // namespace hybridnav
