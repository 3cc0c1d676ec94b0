#pragma once

#include "hybridnav/primitives.hpp"
#include "hybridnav/voxel_map.hpp"

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace hybridnav {

struct SearchConfig {
  double z_threshold = 0.3;      // nodes at or above this altitude are aerial
  double g_air_constant = 20.0;  // charged once per aerial node
  double rho = 0.16;             // time weight in the control-effort functional
  ExpansionConfig expansion;
  int max_iterations = 300000;
  /// Terrestrial analytic shots are only tried when the goal bearing is within
  /// this angle of the node yaw (pi disables the gate).
  double analytic_yaw_gate = 0.6;
  /// Goal-reached ball radius; <= 0 means one voxel diagonal.
  double goal_tolerance = 0.0;
  /// Clearance above z_threshold targeted by take-off candidates.
  double takeoff_margin = 0.05;
  bool allow_takeoff = true;

  void validate() const;
};

/// Per-axis cubic p(t) = c0 + c1 t + c2 t^2 + c3 t^3 on [0, duration].
struct PolySegment {
  Eigen::Matrix<double, 3, 4> coeffs = Eigen::Matrix<double, 3, 4>::Zero();
  double duration = 0.0;

  [[nodiscard]] Vec3 position(double t) const;
  [[nodiscard]] Vec3 velocity(double t) const;
  [[nodiscard]] Vec3 acceleration(double t) const;
  /// Integral of |p''(t)|^2 over the segment.
  [[nodiscard]] double acceleration_energy() const;
};

struct SearchStats {
  int iterations = 0;
  int expanded_nodes = 0;
  int generated_nodes = 0;
};

struct PlanResult {
  std::vector<MotionPrimitive> primitives;
  std::optional<PolySegment> analytic_tail;
  bool tail_from_aerial = false;
  KinoState start;
  Vec3 goal = Vec3::Zero();
  double z_threshold = 0.0;
  SearchStats stats;
};

enum class PlanErrorKind { NoPath, InvalidStart };

class PlanError : public std::runtime_error {
 public:
  PlanError(PlanErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] PlanErrorKind kind() const { return kind_; }

 private:
  PlanErrorKind kind_;
};

struct SearchNode {
  KinoState state;
  Vec3i voxel = Vec3i::Zero();
  std::optional<MotionPrimitive> primitive;
  int parent = -1;  // index into the node pool
  double g_c = 0.0;
  double g_air = 0.0;
  double f_c = 0.0;
};

double edge_cost(const MotionPrimitive& primitive, const SearchConfig& cfg);

/// Minimal (|u|^2 + rho) cost of steering a double integrator from `state` to
/// `goal` with free terminal velocity. `optimal_time` receives the arrival time.
double heuristic(const KinoState& state, const Vec3& goal, const SearchConfig& cfg,
                 double* optimal_time = nullptr);

/// Real roots of c4 t^4 + c3 t^3 + c2 t^2 + c1 t + c0.
std::vector<double> real_quartic_roots(double c4, double c3, double c2, double c1, double c0);

/// One node per ending voxel, keeping the minimum f_c (first listed on ties).
/// Candidates must carry their voxel and f_c.
std::vector<SearchNode> prune(const std::vector<SearchNode>& candidates);

bool check_feasible(const MotionPrimitive& primitive, const VoxelMap& map,
                    const SearchConfig& cfg);

/// Cubic to (goal, zero velocity), if it is collision-free and within the
/// dynamic limits. The arrival time minimizes the same effort-plus-time
/// functional as the heuristic, with the terminal velocity fixed at zero.
std::optional<PolySegment> analytic_expand(const KinoState& state, const Vec3& goal,
                                           const VoxelMap& map, const SearchConfig& cfg);

PlanResult plan(const KinoState& start, const Vec3& goal, const VoxelMap& map,
                const SearchConfig& cfg);

/// Sum of edge costs plus aerial charges along a plan, and the tail control cost.
double path_cost(const PlanResult& result, const SearchConfig& cfg);

}  // namespace hybridnav
