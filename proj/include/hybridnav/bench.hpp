#pragma once

#include "hybridnav/sim.hpp"

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace hybridnav {

enum class RunKind { PlanOnly, TrackReference, ClosedLoop };

enum class ReferenceShape { Circle, Lemniscate };

struct ReferenceSpec {
  ReferenceShape shape = ReferenceShape::Circle;
  double radius = 1.2;  // circle
  double length = 3.6;  // lemniscate extent along x
  double width = 1.4;   // lemniscate extent along y
  double v_max = 0.8;
  Vec3 center = Vec3::Zero();
  int segments = 400;
  int laps = 1;
};

struct LimitRow {
  double v_max = 0.0;
  double a_max = 0.0;
};

struct Scenario {
  std::string name;
  std::filesystem::path map_file;
  double inflation = 0.0;
  KinoState start;
  std::vector<Vec3> goals;
  RunKind kind = RunKind::ClosedLoop;
  ReferenceSpec reference;
  ClosedLoopConfig config;
  double sample_step = 0.05;  // trajectory CSV spacing
  std::vector<LimitRow> compare_limits;  // dynamic-limit rows for planner comparison
};

/// Error with the offending source line (0 when not tied to a line).
class ScenarioError : public InputError {
 public:
  ScenarioError(const std::string& source, int line, const std::string& what);
  [[nodiscard]] int line() const { return line_; }

 private:
  int line_;
};

/// Sectioned key = value text; unknown sections and keys are errors. Relative
/// map paths resolve against `base_dir`.
Scenario parse_scenario(std::istream& in, const std::string& source_name,
                        const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& path);

/// Closed reference curve with max speed v_max and tangent yaw.
Trajectory make_reference(const ReferenceSpec& spec);

/// Period of one lap of the reference.
double reference_period(const ReferenceSpec& spec);

struct ComparisonRow {
  std::string label_a;
  std::string label_b;
  double v_max = 0.0;
  double a_max = 0.0;
  TrackingMetrics a;
  TrackingMetrics b;
  double ratio = 0.0;  // b.E_ap / a.E_ap
};

struct RunSummary {
  std::string label;
  TrackingMetrics metrics;
  std::vector<SearchStats> plan_stats;
  std::vector<RunEvent> events;
  bool done = false;
  double end_time = 0.0;
};

struct BenchReport {
  std::string scenario;
  std::vector<RunSummary> runs;
  std::vector<ComparisonRow> comparisons;
};

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<unsigned> seed;  // perturbs the start by up to 1 cm and 1 degree
  std::optional<double> sample_step;
};

/// Executes the scenario's run kind and writes run.csv, metrics.json and
/// events.jsonl (plan-only runs write trajectory.csv instead of run.csv).
BenchReport run_scenario(const std::filesystem::path& path, const RunOptions& opts = {});
BenchReport run_scenario(const Scenario& scenario, const RunOptions& opts = {});

/// Closed-loop crawl tracking of the constrained planner (expansion alpha as
/// given) against the yaw-unconstrained alpha = 0 baseline, same limits.
ComparisonRow compare_planners(const Scenario& scenario, const ClosedLoopConfig& constrained,
                               const ClosedLoopConfig& baseline);

/// The baseline configuration derived from `cfg`.
ClosedLoopConfig unconstrained_baseline(const ClosedLoopConfig& cfg);

/// `cfg` with the velocity and acceleration limits (and input bound) replaced.
ClosedLoopConfig with_limits(ClosedLoopConfig cfg, double v_max, double a_max);

/// One comparison row per limit row of the scenario (its own limits if none),
/// with the constrained side using expansion alpha = `alpha`.
std::vector<ComparisonRow> compare_scenario(const Scenario& scenario, int alpha);

std::string metrics_json(const TrackingMetrics& m);

}  // namespace hybridnav
