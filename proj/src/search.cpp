#include "hybridnav/search.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>
#include <queue>
#include <unordered_map>

namespace hybridnav {

void SearchConfig::validate() const {
  expansion.validate();
  if (!(g_air_constant >= 0.0)) throw InputError("g_air_constant must be >= 0");
  if (!(rho > 0.0)) throw InputError("rho must be positive");
  if (max_iterations < 1) throw InputError("max_iterations must be >= 1");
}

Vec3 PolySegment::position(double t) const {
  return coeffs.col(0) + t * (coeffs.col(1) + t * (coeffs.col(2) + t * coeffs.col(3)));
}

Vec3 PolySegment::velocity(double t) const {
  return coeffs.col(1) + t * (2.0 * coeffs.col(2) + 3.0 * t * coeffs.col(3));
}

Vec3 PolySegment::acceleration(double t) const {
  return 2.0 * coeffs.col(2) + 6.0 * t * coeffs.col(3);
}

double PolySegment::acceleration_energy() const {
  // a(t) = 2 c2 + 6 c3 t  =>  int |a|^2 = 4|c2|^2 T + 12 c2.c3 T^2 + 12 |c3|^2 T^3
  const double T = duration;
  const Vec3 c2 = coeffs.col(2), c3 = coeffs.col(3);
  return 4.0 * c2.squaredNorm() * T + 12.0 * c2.dot(c3) * T * T +
         12.0 * c3.squaredNorm() * T * T * T;
}

double edge_cost(const MotionPrimitive& primitive, const SearchConfig& cfg) {
  return (primitive.input.u.squaredNorm() + cfg.rho) * primitive.input.tau;
}

std::vector<double> real_quartic_roots(double c4, double c3, double c2, double c1, double c0) {
  std::vector<double> roots;
  if (c4 == 0.0) throw InputError("real_quartic_roots: leading coefficient is zero");
  const double a3 = c3 / c4, a2 = c2 / c4, a1 = c1 / c4, a0 = c0 / c4;

  Eigen::Matrix4d companion = Eigen::Matrix4d::Zero();
  companion(1, 0) = companion(2, 1) = companion(3, 2) = 1.0;
  companion(0, 3) = -a0;
  companion(1, 3) = -a1;
  companion(2, 3) = -a2;
  companion(3, 3) = -a3;
  Eigen::EigenSolver<Eigen::Matrix4d> solver(companion, false);
  const auto& ev = solver.eigenvalues();

  auto poly = [&](double t) { return (((t + a3) * t + a2) * t + a1) * t + a0; };
  auto dpoly = [&](double t) { return ((4.0 * t + 3.0 * a3) * t + 2.0 * a2) * t + a1; };

  for (int i = 0; i < 4; ++i) {
    const double re = ev[i].real();
    const double scale = std::max(1.0, std::abs(re));
    if (std::abs(ev[i].imag()) > 1e-6 * scale) continue;
    double t = re;
    for (int k = 0; k < 8; ++k) {  // Newton polish
      const double d = dpoly(t);
      if (d == 0.0) break;
      const double step = poly(t) / d;
      t -= step;
      if (std::abs(step) < 1e-15 * scale) break;
    }
    roots.push_back(t);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

double heuristic(const KinoState& state, const Vec3& goal, const SearchConfig& cfg,
                 double* optimal_time) {
  // With u(t) = c (T - t) the free-end-velocity minimum effort is 3|d|^2/T^3,
  // d = dp - v0 T. Stationarity of J(T) = 3|d|^2/T^3 + rho T gives
  //   rho T^4 - 3|v0|^2 T^2 + 12 (dp.v0) T - 9 |dp|^2 = 0.
  const Vec3 dp = goal - state.p;
  const Vec3& v0 = state.v;
  const double rho = cfg.rho;
  const double pp = dp.squaredNorm(), pv = dp.dot(v0), vv = v0.squaredNorm();

  auto cost = [&](double T) {
    return 3.0 * pp / (T * T * T) - 6.0 * pv / (T * T) + 3.0 * vv / T + rho * T;
  };

  if (pp == 0.0 && vv == 0.0) {
    if (optimal_time) *optimal_time = 0.0;
    return 0.0;
  }

  double best = std::numeric_limits<double>::infinity();
  double best_t = 0.0;
  for (double T : real_quartic_roots(rho, 0.0, -3.0 * vv, 12.0 * pv, -9.0 * pp)) {
    if (!(T > 1e-9)) continue;
    const double c = cost(T);
    if (c < best) {
      best = c;
      best_t = T;
    }
  }
  if (!std::isfinite(best)) {  // numerically degenerate; fall back to J(T) -> min at rest
    best = 0.0;
    best_t = 0.0;
  }
  if (optimal_time) *optimal_time = best_t;
  return std::max(best, 0.0);
}

std::vector<SearchNode> prune(const std::vector<SearchNode>& candidates) {
  struct VoxelHash {
    std::size_t operator()(const Vec3i& v) const {
      std::size_t h = std::hash<int>()(v.x());
      h ^= std::hash<int>()(v.y()) + 0x9e3779b9 + (h << 6) + (h >> 2);
      h ^= std::hash<int>()(v.z()) + 0x9e3779b9 + (h << 6) + (h >> 2);
      return h;
    }
  };
  std::vector<SearchNode> out;
  std::unordered_map<Vec3i, std::size_t, VoxelHash> slot;
  for (const auto& c : candidates) {
    auto [it, inserted] = slot.try_emplace(c.voxel, out.size());
    if (inserted) {
      out.push_back(c);
    } else if (c.f_c < out[it->second].f_c) {
      out[it->second] = c;
    }
  }
  return out;
}

bool check_feasible(const MotionPrimitive& primitive, const VoxelMap& map,
                    const SearchConfig& cfg) {
  const auto& ex = cfg.expansion;
  if (primitive.input.u.cwiseAbs().maxCoeff() > ex.a_max + 1e-12) return false;
  const double step = 0.5 * map.resolution();
  for (std::size_t i = 0; i < primitive.samples.size(); ++i) {
    const auto& s = primitive.samples[i];
    if (s.v.norm() > ex.v_max + 1e-9) return false;
    if (!map.is_free(s.p)) return false;
    if (i > 0 && !map.segment_free(primitive.samples[i - 1].p, s.p, step)) return false;
  }
  return true;
}

namespace {

PolySegment cubic_to_rest(const KinoState& s, const Vec3& goal, double T) {
  PolySegment seg;
  seg.duration = T;
  const Vec3 d = goal - s.p;
  seg.coeffs.col(0) = s.p;
  seg.coeffs.col(1) = s.v;
  seg.coeffs.col(2) = (3.0 * d - 2.0 * s.v * T) / (T * T);
  seg.coeffs.col(3) = (-2.0 * d + s.v * T) / (T * T * T);
  return seg;
}

/// Arrival time minimizing the cubic's effort plus rho T for the rest-at-goal
/// boundary condition:
///   rho T^4 - 4|v0|^2 T^2 + 24 (dp.v0) T - 36 |dp|^2 = 0.
double rest_arrival_time(const KinoState& s, const Vec3& goal, double rho) {
  const Vec3 dp = goal - s.p;
  const double pp = dp.squaredNorm(), pv = dp.dot(s.v), vv = s.v.squaredNorm();
  if (pp == 0.0 && vv == 0.0) return 0.0;
  auto cost = [&](double T) {
    return 12.0 * pp / (T * T * T) - 12.0 * pv / (T * T) + 4.0 * vv / T + rho * T;
  };
  double best = std::numeric_limits<double>::infinity(), best_t = 0.0;
  for (double T : real_quartic_roots(rho, 0.0, -4.0 * vv, 24.0 * pv, -36.0 * pp)) {
    if (!(T > 1e-9)) continue;
    if (const double c = cost(T); c < best) {
      best = c;
      best_t = T;
    }
  }
  return best_t;
}

bool segment_valid(const PolySegment& seg, const VoxelMap& map, const SearchConfig& cfg,
                   bool aerial) {
  const auto& ex = cfg.expansion;
  const double tol = 1e-9;
  // Acceleration is affine in t, so the endpoints bound it.
  if (seg.acceleration(0.0).cwiseAbs().maxCoeff() > ex.a_max + tol) return false;
  if (seg.acceleration(seg.duration).cwiseAbs().maxCoeff() > ex.a_max + tol) return false;

  const double step = 0.5 * map.resolution();
  const double dt = std::min(0.05, step / ex.v_max);
  const int n = std::max(2, static_cast<int>(std::ceil(seg.duration / dt)));
  Vec3 prev = seg.position(0.0);
  bool prev_above = prev.z() >= cfg.z_threshold;
  int crossings = 0;
  if (!map.is_free(prev)) return false;
  for (int i = 1; i <= n; ++i) {
    const double t = seg.duration * i / n;
    const Vec3 p = seg.position(t);
    if (seg.velocity(t).norm() > ex.v_max + tol) return false;
    if (!map.segment_free(prev, p, step)) return false;
    const bool above = p.z() >= cfg.z_threshold;
    if (above != prev_above) ++crossings;
    prev_above = above;
    prev = p;
  }
  // An aerial shot may come down through the threshold once; a ground shot
  // must stay on the ground side.
  return aerial ? crossings <= 1 : crossings == 0;
}

}  // namespace

std::optional<PolySegment> analytic_expand(const KinoState& state, const Vec3& goal,
                                           const VoxelMap& map, const SearchConfig& cfg) {
  const bool aerial = state.p.z() >= cfg.z_threshold;
  if (!aerial) {
    if (goal.z() >= cfg.z_threshold) return std::nullopt;
    if (cfg.analytic_yaw_gate < kPi) {
      const auto bearing = yaw_of_displacement(state.p, goal);
      if (bearing && std::abs(angle_diff(*bearing, state.yaw)) >= cfg.analytic_yaw_gate)
        return std::nullopt;
    }
  }
  const double T = rest_arrival_time(state, goal, cfg.rho);
  if (!(T > 1e-6)) return std::nullopt;
  PolySegment seg = cubic_to_rest(state, goal, T);
  if (!segment_valid(seg, map, cfg, aerial)) return std::nullopt;
  return seg;
}

namespace {

struct QueueEntry {
  double f;
  std::uint64_t seq;
  int node;
  bool operator>(const QueueEntry& o) const { return f != o.f ? f > o.f : seq > o.seq; }
};

enum class NodeSet : std::uint8_t { Open, Closed };

}  // namespace

PlanResult plan(const KinoState& start, const Vec3& goal, const VoxelMap& map,
                const SearchConfig& cfg_in) {
  cfg_in.validate();
  SearchConfig cfg = cfg_in;
  if (!cfg.expansion.carry_yaw) cfg.expansion.fixed_frame_yaw = start.yaw;
  const double tol = cfg.goal_tolerance > 0.0 ? cfg.goal_tolerance
                                              : std::sqrt(3.0) * map.resolution();

  if (!map.is_free(start.p)) throw PlanError(PlanErrorKind::InvalidStart, "start state is in collision");
  if (!map.contains(goal)) throw PlanError(PlanErrorKind::NoPath, "goal is outside the map bounds");

  PlanResult result;
  result.start = start;
  result.goal = goal;
  result.z_threshold = cfg.z_threshold;

  std::vector<SearchNode> pool;
  std::vector<NodeSet> status;
  std::unordered_map<std::int64_t, int> by_voxel;
  std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>> open;
  std::uint64_t seq = 0;

  SearchNode root;
  root.state = start;
  root.voxel = map.index_of(start.p);
  root.g_air = start.p.z() >= cfg.z_threshold ? cfg.g_air_constant : 0.0;
  root.f_c = heuristic(start, goal, cfg);
  pool.push_back(root);
  status.push_back(NodeSet::Open);
  by_voxel[map.linear_index(root.voxel)] = 0;
  open.push({root.f_c, seq++, 0});

  auto retrieve = [&](int id) {
    for (int n = id; pool[static_cast<std::size_t>(n)].parent >= 0;
         n = pool[static_cast<std::size_t>(n)].parent)
      result.primitives.push_back(*pool[static_cast<std::size_t>(n)].primitive);
    std::reverse(result.primitives.begin(), result.primitives.end());
  };

  const double takeoff_z = cfg.z_threshold + cfg.takeoff_margin;

  while (!open.empty()) {
    const QueueEntry top = open.top();
    open.pop();
    const auto cid = static_cast<std::size_t>(top.node);
    if (status[cid] == NodeSet::Closed || top.f != pool[cid].f_c) continue;
    status[cid] = NodeSet::Closed;
    if (++result.stats.iterations > cfg.max_iterations)
      throw PlanError(PlanErrorKind::NoPath, "search exceeded max_iterations");

    const SearchNode current = pool[cid];
    if ((current.state.p - goal).norm() <= tol) {
      retrieve(top.node);
      return result;
    }
    if (auto shot = analytic_expand(current.state, goal, map, cfg)) {
      retrieve(top.node);
      result.analytic_tail = *shot;
      result.tail_from_aerial = current.state.p.z() >= cfg.z_threshold;
      return result;
    }
    ++result.stats.expanded_nodes;

    std::vector<MotionPrimitive> primitives;
    if (current.state.p.z() >= cfg.z_threshold) {
      for (auto& prim : aerial_expand(current.state, cfg.expansion)) {
        // Aerial edges stay above the threshold; descending happens through
        // the analytic shot only.
        const bool stays_up = std::all_of(prim.samples.begin(), prim.samples.end(),
                                          [&](const KinoState& s) { return s.p.z() >= cfg.z_threshold; });
        if (stays_up) primitives.push_back(std::move(prim));
      }
    } else {
      primitives = terrestrial_expand(current.state, cfg.expansion);
      if (cfg.allow_takeoff) {
        const PrimitiveInput lift = takeoff_input(cfg.expansion, takeoff_z);
        primitives.push_back(make_primitive(current.state, lift, MotionMode::Aerial, cfg.expansion));
      }
    }

    std::vector<SearchNode> candidates;
    candidates.reserve(primitives.size());
    for (auto& prim : primitives) {
      SearchNode n;
      n.state = prim.end;
      n.voxel = map.index_of(prim.end.p);
      n.g_air = prim.end.p.z() >= cfg.z_threshold ? cfg.g_air_constant : 0.0;
      n.g_c = n.g_air + current.g_c + edge_cost(prim, cfg);
      n.f_c = n.g_c + heuristic(n.state, goal, cfg);
      n.parent = top.node;
      n.primitive = std::move(prim);
      candidates.push_back(std::move(n));
    }

    for (auto& n : prune(candidates)) {
      if (!map.in_bounds(n.voxel)) continue;
      const std::int64_t key = map.linear_index(n.voxel);
      auto it = by_voxel.find(key);
      if (it != by_voxel.end() && status[static_cast<std::size_t>(it->second)] == NodeSet::Closed)
        continue;
      if (!check_feasible(*n.primitive, map, cfg)) continue;
      const double g_temp = n.g_c;
      int id;
      if (it == by_voxel.end()) {
        id = static_cast<int>(pool.size());
        pool.push_back(n);
        status.push_back(NodeSet::Open);
        by_voxel.emplace(key, id);
        ++result.stats.generated_nodes;
      } else {
        id = it->second;
        if (g_temp >= pool[static_cast<std::size_t>(id)].g_c) continue;
        pool[static_cast<std::size_t>(id)] = n;
      }
      open.push({pool[static_cast<std::size_t>(id)].f_c, seq++, id});
    }
  }
  throw PlanError(PlanErrorKind::NoPath, "open set exhausted without reaching the goal");
}

double path_cost(const PlanResult& result, const SearchConfig& cfg) {
  double c = 0.0;
  for (const auto& prim : result.primitives) {
    c += edge_cost(prim, cfg);
    if (prim.end.p.z() >= cfg.z_threshold) c += cfg.g_air_constant;
  }
  if (result.analytic_tail)
    c += result.analytic_tail->acceleration_energy() + cfg.rho * result.analytic_tail->duration;
  return c;
}

}  // namespace hybridnav
