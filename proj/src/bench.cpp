#include "hybridnav/bench.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

namespace hybridnav {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;) out.push_back(tok);
  return out;
}

double to_double(const std::string& tok) {
  double v = 0.0;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw InputError("expected a number, got '" + tok + "'");
  return v;
}

int to_int(const std::string& tok) {
  int v = 0;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) throw InputError("expected an integer, got '" + tok + "'");
  return v;
}

bool to_bool(const std::string& tok) {
  if (tok == "true" || tok == "1" || tok == "yes") return true;
  if (tok == "false" || tok == "0" || tok == "no") return false;
  throw InputError("expected true or false, got '" + tok + "'");
}

double scalar(const std::string& value) {
  const auto toks = split_ws(value);
  if (toks.size() != 1) throw InputError("expected one number");
  return to_double(toks[0]);
}

Vec3 vec3(const std::string& value) {
  const auto toks = split_ws(value);
  if (toks.size() != 3) throw InputError("expected three numbers");
  return {to_double(toks[0]), to_double(toks[1]), to_double(toks[2])};
}

using Setter = std::function<void(const std::string&)>;
using Section = std::map<std::string, Setter>;

struct ParseState {
  Scenario sc;
  bool takeoff_altitude_set = false;
};

std::map<std::string, Section> make_sections(ParseState& st, const fs::path& base_dir) {
  Scenario& sc = st.sc;
  auto& search = sc.config.planner;
  auto& exp = sc.config.planner.expansion;
  auto& ter = sc.config.terrestrial;
  auto& aer = sc.config.aerial;
  auto& mis = sc.config.mission;
  auto& sim = sc.config.sim;
  auto num = [](double& dst) { return [&dst](const std::string& v) { dst = scalar(v); }; };
  auto integer = [](int& dst) {
    return [&dst](const std::string& v) {
      const auto t = split_ws(v);
      if (t.size() != 1) throw InputError("expected one integer");
      dst = to_int(t[0]);
    };
  };
  auto boolean = [](bool& dst) {
    return [&dst](const std::string& v) {
      const auto t = split_ws(v);
      if (t.size() != 1) throw InputError("expected true or false");
      dst = to_bool(t[0]);
    };
  };

  std::map<std::string, Section> s;
  s["scenario"] = {
      {"name", [&](const std::string& v) { sc.name = v; }},
      {"kind",
       [&](const std::string& v) {
         if (v == "plan_only")
           sc.kind = RunKind::PlanOnly;
         else if (v == "track_reference")
           sc.kind = RunKind::TrackReference;
         else if (v == "closed_loop")
           sc.kind = RunKind::ClosedLoop;
         else
           throw InputError("kind must be plan_only, track_reference or closed_loop");
       }},
      {"map",
       [&, base_dir](const std::string& v) {
         fs::path p(v);
         sc.map_file = p.is_absolute() ? p : base_dir / p;
       }},
      {"inflation", num(sc.inflation)},
      {"start", [&](const std::string& v) { sc.start.p = vec3(v); }},
      {"start_yaw", [&](const std::string& v) { sc.start.yaw = wrap_angle(scalar(v)); }},
      {"goal", [&](const std::string& v) { sc.goals.push_back(vec3(v)); }},
      {"sample_step", num(sc.sample_step)},
  };
  s["reference"] = {
      {"shape",
       [&](const std::string& v) {
         if (v == "circle")
           sc.reference.shape = ReferenceShape::Circle;
         else if (v == "lemniscate")
           sc.reference.shape = ReferenceShape::Lemniscate;
         else
           throw InputError("shape must be circle or lemniscate");
       }},
      {"radius", num(sc.reference.radius)},
      {"length", num(sc.reference.length)},
      {"width", num(sc.reference.width)},
      {"v_max", num(sc.reference.v_max)},
      {"center", [&](const std::string& v) { sc.reference.center = vec3(v); }},
      {"segments", integer(sc.reference.segments)},
      {"laps", integer(sc.reference.laps)},
  };
  s["search"] = {
      {"z_threshold", num(search.z_threshold)},
      {"g_air", num(search.g_air_constant)},
      {"rho", num(search.rho)},
      {"max_iterations", integer(search.max_iterations)},
      {"analytic_yaw_gate", num(search.analytic_yaw_gate)},
      {"goal_tolerance", num(search.goal_tolerance)},
      {"takeoff_margin", num(search.takeoff_margin)},
      {"allow_takeoff", boolean(search.allow_takeoff)},
      {"u_max", num(exp.u_max)},
      {"resolution", integer(exp.resolution)},
      {"alpha", integer(exp.alpha)},
      {"tau", num(exp.tau)},
      {"sample_count", integer(exp.sample_count)},
      {"v_max", num(exp.v_max)},
      {"a_max", num(exp.a_max)},
      {"carry_yaw", boolean(exp.carry_yaw)},
  };
  s["terrestrial"] = {
      {"K_y", num(ter.K_y)},
      {"lambda_p_far", num(ter.lambda_p_far)},
      {"lambda_p_near", num(ter.lambda_p_near)},
      {"p_err_threshold", num(ter.p_err_threshold)},
      {"K_p", num(ter.K_p)},
      {"K_thr", num(ter.K_thr)},
      {"f_thr_crawl_max", num(ter.f_thr_crawl_max)},
      {"fit_slope", num(ter.fit_slope)},
      {"fit_intercept", num(ter.fit_intercept)},
  };
  s["aerial"] = {
      {"kp", [&](const std::string& v) { aer.kp = vec3(v); }},
      {"kv", [&](const std::string& v) { aer.kv = vec3(v); }},
      {"hover_throttle", num(aer.hover_throttle)},
      {"k_att", num(aer.k_att)},
  };
  s["mission"] = {
      {"deform_duration", num(mis.deform_duration)},
      {"takeoff_altitude",
       [&](const std::string& v) {
         mis.takeoff_altitude = scalar(v);
         st.takeoff_altitude_set = true;
       }},
      {"takeoff_tolerance", num(mis.takeoff_tolerance)},
      {"landing_descent_rate", num(mis.landing_descent_rate)},
      {"goal_tolerance", num(mis.goal_tolerance)},
      {"contact_height", num(mis.contact_height)},
      {"contact_speed", num(mis.contact_speed)},
  };
  s["sim"] = {
      {"dt", num(sim.dt)},
      {"rate_bandwidth", num(sim.rate_bandwidth)},
      {"min_turn_radius", num(sim.min_turn_radius)},
      {"control_period", num(sim.control_period)},
      {"timeout", num(sim.timeout)},
  };
  s["smoothing"] = {
      {"enabled", boolean(sc.config.smooth)},
      {"max_iterations", integer(sc.config.smoothing.max_iterations)},
  };
  s["compare"] = {
      {"limits",
       [&](const std::string& v) {
         const auto t = split_ws(v);
         if (t.size() != 2) throw InputError("limits takes v_max a_max");
         sc.compare_limits.push_back({to_double(t[0]), to_double(t[1])});
       }},
  };
  return s;
}

void apply_shared(Scenario& sc, bool takeoff_altitude_set) {
  auto& c = sc.config;
  c.mission.z_threshold = c.planner.z_threshold;
  c.mission.tick = c.sim.control_period;
  if (!takeoff_altitude_set) c.mission.takeoff_altitude = c.planner.z_threshold + 0.5;
  c.sim.hover_throttle = c.aerial.hover_throttle;
  c.sim.fit_slope = c.terrestrial.fit_slope;
  c.sim.fit_intercept = c.terrestrial.fit_intercept;
  c.smoothing.v_max = c.planner.expansion.v_max;
  c.smoothing.a_max = c.planner.expansion.a_max;
}

Scenario perturbed(Scenario sc, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> radius(0.0, 0.01);
  std::uniform_real_distribution<double> angle(-kPi, kPi);
  std::uniform_real_distribution<double> yaw(-kPi / 180.0, kPi / 180.0);
  const double r = radius(rng), a = angle(rng);
  sc.start.p.x() += r * std::cos(a);
  sc.start.p.y() += r * std::sin(a);
  sc.start.yaw = wrap_angle(sc.start.yaw + yaw(rng));
  return sc;
}

json stats_json(const SearchStats& s) {
  return {{"iterations", s.iterations},
          {"expanded_nodes", s.expanded_nodes},
          {"generated_nodes", s.generated_nodes}};
}

json metrics_object(const TrackingMetrics& m) {
  return {{"E_ap", m.E_ap}, {"E_mp", m.E_mp}, {"E_ay", m.E_ay}, {"E_my", m.E_my}};
}

VoxelMap scenario_map(const Scenario& sc) {
  VoxelMap map = load_map_file(sc.map_file);
  if (sc.inflation > 0.0) map = map.inflate(sc.inflation);
  return map;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  body(out);
}

std::string with_name(const Scenario& sc, const std::string& what) {
  return sc.name.empty() ? what : sc.name + ": " + what;
}

}  // namespace

ScenarioError::ScenarioError(const std::string& source, int line, const std::string& what)
    : InputError(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + what),
      line_(line) {}

Scenario parse_scenario(std::istream& in, const std::string& source_name,
                        const fs::path& base_dir) {
  ParseState st;
  const auto sections = make_sections(st, base_dir);
  const Section* current = nullptr;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string text = trim(std::string_view(line).substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ScenarioError(source_name, lineno, "malformed section header");
      const std::string name = trim(std::string_view(text).substr(1, text.size() - 2));
      auto it = sections.find(name);
      if (it == sections.end())
        throw ScenarioError(source_name, lineno, "unknown section [" + name + "]");
      current = &it->second;
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ScenarioError(source_name, lineno, "expected key = value");
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    if (!current) throw ScenarioError(source_name, lineno, "key '" + key + "' outside a section");
    auto setter = current->find(key);
    if (setter == current->end())
      throw ScenarioError(source_name, lineno, "unknown key '" + key + "'");
    try {
      setter->second(value);
    } catch (const InputError& e) {
      throw ScenarioError(source_name, lineno, key + ": " + e.what());
    }
  }

  Scenario sc = st.sc;
  apply_shared(sc, st.takeoff_altitude_set);
  if (sc.name.empty()) sc.name = fs::path(source_name).stem().string();
  if (sc.kind != RunKind::TrackReference) {
    if (sc.goals.empty()) throw ScenarioError(source_name, 0, "at least one goal is required");
    if (sc.map_file.empty()) throw ScenarioError(source_name, 0, "map is required");
    if (!fs::exists(sc.map_file))
      throw ScenarioError(source_name, 0, "map file not found: " + sc.map_file.string());
  }
  try {
    sc.config.planner.validate();
    sc.config.mission.validate();
    sc.config.sim.validate();
    sc.config.terrestrial.validate();
    sc.config.aerial.validate();
  } catch (const InputError& e) {
    throw ScenarioError(source_name, 0, e.what());
  }
  return sc;
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path.string(), 0, "cannot open scenario file");
  return parse_scenario(in, path.string(), path.parent_path());
}

double reference_period(const ReferenceSpec& spec) {
  if (spec.shape == ReferenceShape::Circle) return 2.0 * kPi * spec.radius / spec.v_max;
  const double a = 0.5 * spec.length;
  const double omega = spec.v_max / std::hypot(a, spec.width);
  return 2.0 * kPi / omega;
}

Trajectory make_reference(const ReferenceSpec& spec) {
  if (!(spec.radius > 0 && spec.length > 0 && spec.width > 0 && spec.v_max > 0 &&
        spec.segments >= 4 && spec.laps >= 1))
    throw InputError("reference parameters must be positive");
  const double period = reference_period(spec);
  const double omega = 2.0 * kPi / period;

  auto state = [&](double t) -> std::pair<Vec3, Vec3> {
    const double s = omega * t;
    if (spec.shape == ReferenceShape::Circle) {
      const double r = spec.radius;
      return {spec.center + Vec3(r * std::cos(s), r * std::sin(s), 0.0),
              Vec3(-r * omega * std::sin(s), r * omega * std::cos(s), 0.0)};
    }
    // Gerono lemniscate spanning length x width.
    const double a = 0.5 * spec.length, b = 0.5 * spec.width;
    return {spec.center + Vec3(a * std::sin(s), b * std::sin(2.0 * s), 0.0),
            Vec3(a * omega * std::cos(s), 2.0 * b * omega * std::cos(2.0 * s), 0.0)};
  };

  const int n = spec.segments * spec.laps;
  const double total = period * spec.laps;
  std::vector<TrajectorySegment> segs;
  segs.reserve(static_cast<std::size_t>(n));
  auto knot = [&](int k) { return k == n ? total : total * k / n; };
  for (int k = 0; k < n; ++k) {
    const double t0 = knot(k), t1 = knot(k + 1);
    const auto [p0, v0] = state(t0);
    const auto [p1, v1] = state(t1);
    const double T = t1 - t0;
    TrajectorySegment seg;
    seg.t0 = t0;
    seg.poly.duration = T;
    seg.poly.coeffs.col(0) = p0;
    seg.poly.coeffs.col(1) = v0;
    seg.poly.coeffs.col(2) = (3.0 * (p1 - p0) - (2.0 * v0 + v1) * T) / (T * T);
    seg.poly.coeffs.col(3) = (-2.0 * (p1 - p0) + (v0 + v1) * T) / (T * T * T);
    segs.push_back(seg);
  }
  Trajectory traj(std::move(segs), std::numeric_limits<double>::infinity());
  const Vec3 v0 = state(0.0).second;
  traj.rechain_yaw(std::atan2(v0.y(), v0.x()));
  return traj;
}

ClosedLoopConfig unconstrained_baseline(const ClosedLoopConfig& cfg) {
  ClosedLoopConfig b = cfg;
  b.planner.expansion.alpha = 0;
  b.planner.expansion.carry_yaw = false;
  b.planner.analytic_yaw_gate = kPi;
  return b;
}

ComparisonRow compare_planners(const Scenario& scenario, const ClosedLoopConfig& constrained,
                               const ClosedLoopConfig& baseline) {
  const auto& ea = constrained.planner.expansion;
  const auto& eb = baseline.planner.expansion;
  if (ea.v_max != eb.v_max || ea.a_max != eb.a_max)
    throw InputError("compared planners must share v_max and a_max");
  const VoxelMap map = scenario_map(scenario);
  ComparisonRow row;
  row.label_a = "alpha=" + std::to_string(ea.alpha);
  row.label_b = "baseline";
  row.v_max = ea.v_max;
  row.a_max = ea.a_max;
  row.a = run_metrics(run_closed_loop(scenario.start, scenario.goals, map, constrained));
  row.b = run_metrics(run_closed_loop(scenario.start, scenario.goals, map, baseline));
  row.ratio = row.a.E_ap > 0.0 ? row.b.E_ap / row.a.E_ap : 0.0;
  return row;
}

ClosedLoopConfig with_limits(ClosedLoopConfig cfg, double v_max, double a_max) {
  cfg.planner.expansion.v_max = v_max;
  cfg.planner.expansion.a_max = a_max;
  cfg.planner.expansion.u_max = a_max;
  cfg.smoothing.v_max = v_max;
  cfg.smoothing.a_max = a_max;
  return cfg;
}

std::vector<ComparisonRow> compare_scenario(const Scenario& scenario, int alpha) {
  std::vector<LimitRow> rows = scenario.compare_limits;
  if (rows.empty())
    rows.push_back({scenario.config.planner.expansion.v_max,
                    scenario.config.planner.expansion.a_max});
  std::vector<ComparisonRow> out;
  for (const auto& lim : rows) {
    ClosedLoopConfig a = with_limits(scenario.config, lim.v_max, lim.a_max);
    a.planner.expansion.alpha = alpha;
    out.push_back(compare_planners(scenario, a, unconstrained_baseline(a)));
  }
  return out;
}

std::string metrics_json(const TrackingMetrics& m) { return metrics_object(m).dump(); }

BenchReport run_scenario(const fs::path& path, const RunOptions& opts) {
  return run_scenario(load_scenario(path), opts);
}

BenchReport run_scenario(const Scenario& scenario_in, const RunOptions& opts) {
  const Scenario sc = opts.seed ? perturbed(scenario_in, *opts.seed) : scenario_in;
  const double step = opts.sample_step.value_or(sc.sample_step);
  if (!(step > 0.0)) throw InputError("sample step must be positive");
  if (opts.out_dir) fs::create_directories(*opts.out_dir);

  BenchReport report;
  report.scenario = sc.name;
  RunSummary summary;
  summary.label = sc.name;

  json meta;
  meta["scenario"] = sc.name;
  RunLog log;
  try {
    switch (sc.kind) {
      case RunKind::PlanOnly: {
        const VoxelMap map = scenario_map(sc);
        KinoState from = sc.start;
        std::vector<Trajectory> legs;
        for (const auto& goal : sc.goals) {
          SearchStats stats;
          legs.push_back(plan_trajectory(from, goal, map, sc.config, &stats));
          summary.plan_stats.push_back(stats);
          const auto& last = legs.back().segments().back();
          from = {last.poly.position(last.duration()), Vec3::Zero(), last.yaw_at(last.duration())};
          RunEvent ev;
          ev.kind = "replan";
          ev.primitives = static_cast<int>(legs.back().segments().size());
          log.events.push_back(ev);
        }
        summary.done = true;
        meta["kind"] = "plan_only";
        json jlegs = json::array();
        for (const auto& leg : legs)
          jlegs.push_back({{"duration", leg.total_duration()},
                           {"acceleration_energy", leg.acceleration_energy()},
                           {"segments", leg.segments().size()}});
        meta["legs"] = jlegs;
        if (opts.out_dir)
          write_file(*opts.out_dir / "trajectory.csv", [&](std::ostream& o) {
            for (std::size_t i = 0; i < legs.size(); ++i) {
              std::ostringstream part;
              write_trajectory_csv(part, legs[i], step);
              std::string text = part.str();
              if (i > 0) text = text.substr(text.find('\n') + 1);  // one header
              o << text;
            }
          });
        break;
      }
      case RunKind::TrackReference: {
        const Trajectory ref = make_reference(sc.reference);
        log = track_reference(ref, sc.config.terrestrial, sc.config.sim);
        summary.metrics = run_metrics(log);
        summary.done = true;
        summary.end_time = log.end_time;
        meta["kind"] = "track_reference";
        meta["period"] = reference_period(sc.reference);
        break;
      }
      case RunKind::ClosedLoop: {
        const VoxelMap map = scenario_map(sc);
        log = run_closed_loop(sc.start, sc.goals, map, sc.config);
        summary.metrics = run_metrics(log);
        summary.plan_stats = log.plan_stats;
        summary.done = log.done;
        summary.end_time = log.end_time;
        meta["kind"] = "closed_loop";
        json final_p = {log.final_state.p_hat.x(), log.final_state.p_hat.y(),
                        log.final_state.p_hat.z()};
        meta["final_position"] = final_p;
        break;
      }
    }
  } catch (const PlanError& e) {
    throw PlanError(e.kind(), with_name(sc, e.what()));
  } catch (const RunTimeout& e) {
    throw RunTimeout(with_name(sc, e.what()));
  }
  summary.events = log.events;

  meta.update(metrics_object(summary.metrics));
  meta["done"] = summary.done;
  meta["end_time"] = summary.end_time;
  json plans = json::array();
  for (const auto& s : summary.plan_stats) plans.push_back(stats_json(s));
  meta["plans"] = plans;
  json modes = json::array();
  for (const auto& ev : log.events)
    if (ev.kind == "mode") modes.push_back(ev.to);
  meta["mode_sequence"] = modes;

  if (opts.out_dir) {
    if (sc.kind != RunKind::PlanOnly)
      write_file(*opts.out_dir / "run.csv", [&](std::ostream& o) { write_run_csv(o, log); });
    write_file(*opts.out_dir / "metrics.json", [&](std::ostream& o) { o << meta.dump(2) << '\n'; });
    write_file(*opts.out_dir / "events.jsonl",
               [&](std::ostream& o) { write_events_jsonl(o, log); });
  }
  report.runs.push_back(summary);
  return report;
}

}  // namespace hybridnav
