#include "doctest.h"

#include "hybridnav/bench.hpp"

#include "json.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace hybridnav;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(HYBRIDNAV_SOURCE_DIR) / "scenarios";

Scenario parse(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in, "test.scn", kScenarios);
}

int parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ScenarioError& e) {
    return e.line();
  }
  return -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hybridnav_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HYBRIDNAV_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("parse_scenario") {
  SUBCASE("sections and shared values") {
    const auto sc = parse(
        "[scenario]\n"
        "name = t\n"
        "map = maps/open_ground.txt\n"
        "start = 1 2 0\n"
        "start_yaw = 0.5\n"
        "goal = 6 2 0   # trailing comment\n"
        "goal = 7 2 0\n"
        "[search]\n"
        "z_threshold = 0.4\n"
        "alpha = 2\n"
        "[compare]\n"
        "limits = 1.0 0.8\n");
    CHECK(sc.name == "t");
    CHECK(sc.kind == RunKind::ClosedLoop);
    CHECK(sc.goals.size() == 2);
    CHECK(sc.start.yaw == doctest::Approx(0.5));
    CHECK(sc.map_file == kScenarios / "maps/open_ground.txt");
    CHECK(sc.config.planner.expansion.alpha == 2);
    CHECK(sc.config.mission.z_threshold == doctest::Approx(0.4));
    CHECK(sc.config.mission.takeoff_altitude == doctest::Approx(0.9));
    CHECK(sc.compare_limits.size() == 1);
  }
  SUBCASE("errors point at the line") {
    CHECK(parse_error_line("[scenario]\nname = x\n[bogus]\n") == 3);
    CHECK(parse_error_line("[scenario]\nnmae = x\n") == 2);
    CHECK(parse_error_line("name = x\n") == 1);
    CHECK(parse_error_line("[scenario]\nstart = 1 2\n") == 2);
    CHECK(parse_error_line("[scenario]\nkind = fly\n") == 2);
    CHECK(parse_error_line("[search]\nalpha = two\n") == 2);
    CHECK(parse_error_line("[scenario]\ngoal\n") == 2);
    CHECK(parse_error_line("[scenario\n") == 1);
  }
  SUBCASE("missing pieces") {
    CHECK_THROWS_AS(parse("[scenario]\nmap = maps/open_ground.txt\n"), ScenarioError);
    try {
      parse("[scenario]\nmap = maps/nope.txt\ngoal = 1 1 0\n");
      FAIL("expected an error");
    } catch (const ScenarioError& e) {
      CHECK(std::string(e.what()).find("maps/nope.txt") != std::string::npos);
    }
    CHECK_THROWS_AS(load_scenario(kScenarios / "missing.scn"), InputError);
  }
  SUBCASE("every shipped scenario parses") {
    for (const auto& entry : fs::directory_iterator(kScenarios))
      if (entry.path().extension() == ".scn") CHECK_NOTHROW(load_scenario(entry.path()));
  }
}

TEST_CASE("make_reference") {
  SUBCASE("circle") {
    ReferenceSpec spec;
    spec.radius = 1.2;
    spec.v_max = 0.8;
    const double period = reference_period(spec);
    CHECK(period == doctest::Approx(2 * kPi * 1.2 / 0.8).epsilon(1e-12));
    const auto ref = make_reference(spec);
    CHECK(ref.total_duration() == doctest::Approx(period).epsilon(1e-12));
    CHECK((sample(ref, 0.0).p_d - sample(ref, period).p_d).norm() < 1e-9);
    double vmax = 0.0;
    for (double t = 0.0; t < period; t += 0.013) {
      const auto sp = sample(ref, t);
      vmax = std::max(vmax, sp.v_d.norm());
      CHECK(std::abs(sp.p_d.norm() - 1.2) < 1e-6);
      CHECK(std::abs(angle_diff(sp.yaw_d, std::atan2(sp.v_d.y(), sp.v_d.x()))) < 1e-9);
    }
    CHECK(vmax == doctest::Approx(0.8).epsilon(1e-4));
  }
  SUBCASE("lemniscate bounding box and speed") {
    ReferenceSpec spec;
    spec.shape = ReferenceShape::Lemniscate;
    spec.v_max = 1.0;
    const auto ref = make_reference(spec);
    const double period = reference_period(spec);
    Vec3 lo = Vec3::Constant(1e9), hi = Vec3::Constant(-1e9);
    double vmax = 0.0;
    for (double t = 0.0; t <= period; t += period / 20000) {
      const auto sp = sample(ref, t);
      lo = lo.cwiseMin(sp.p_d);
      hi = hi.cwiseMax(sp.p_d);
      vmax = std::max(vmax, sp.v_d.norm());
    }
    CHECK(hi.x() - lo.x() == doctest::Approx(3.6).epsilon(1e-4));
    CHECK(hi.y() - lo.y() == doctest::Approx(1.4).epsilon(1e-4));
    CHECK(vmax == doctest::Approx(1.0).epsilon(1e-4));
    CHECK((sample(ref, 0.0).p_d - sample(ref, period).p_d).norm() < 1e-9);
  }
  SUBCASE("bad parameters") {
    ReferenceSpec spec;
    spec.radius = 0.0;
    CHECK_THROWS_AS(make_reference(spec), InputError);
  }
}

TEST_CASE("run_scenario") {
  SUBCASE("circle writes finite metrics") {
    const auto out = scratch("circle");
    RunOptions opts;
    opts.out_dir = out;
    const auto report = run_scenario(kScenarios / "circle.scn", opts);
    REQUIRE(report.runs.size() == 1);
    const auto j = nlohmann::json::parse(slurp(out / "metrics.json"));
    for (const char* k : {"E_ap", "E_mp", "E_ay", "E_my"}) {
      REQUIRE(j.contains(k));
      CHECK(std::isfinite(j[k].get<double>()));
    }
    CHECK(fs::exists(out / "run.csv"));
    CHECK(fs::exists(out / "events.jsonl"));
  }
  SUBCASE("plan-only wall run climbs above the threshold") {
    const auto out = scratch("plan_wall");
    RunOptions opts;
    opts.out_dir = out;
    const auto sc = load_scenario(kScenarios / "plan_wall.scn");
    run_scenario(sc, opts);
    std::istringstream csv(slurp(out / "trajectory.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "t,px,py,pz,vx,vy,vz,ax,ay,az,yaw");
    double max_z = 0.0;
    while (std::getline(csv, line)) {
      std::stringstream ls(line);
      std::string cell;
      for (int i = 0; i < 4; ++i) std::getline(ls, cell, ',');
      max_z = std::max(max_z, std::stod(cell));
    }
    CHECK(max_z >= sc.config.planner.z_threshold);
  }
  SUBCASE("re-running overwrites with identical output") {
    const auto a = scratch("rerun_a"), b = scratch("rerun_b");
    RunOptions oa, ob;
    oa.out_dir = a;
    ob.out_dir = b;
    run_scenario(kScenarios / "open_ground.scn", oa);
    run_scenario(kScenarios / "open_ground.scn", ob);
    run_scenario(kScenarios / "open_ground.scn", oa);
    for (const char* f : {"run.csv", "metrics.json", "events.jsonl"}) CHECK(slurp(a / f) == slurp(b / f));
  }
  SUBCASE("seed perturbs the start only slightly") {
    RunOptions opts;
    opts.seed = 4;
    const auto report = run_scenario(kScenarios / "open_ground.scn", opts);
    CHECK(report.runs.at(0).done);
  }
}

TEST_CASE("compare_planners") {
  const auto sc = load_scenario(kScenarios / "lateral_goal.scn");
  SUBCASE("identical configs give a ratio of exactly one") {
    const auto row = compare_planners(sc, sc.config, sc.config);
    CHECK(row.ratio == 1.0);
  }
  SUBCASE("forward goal gives a ratio near one") {
    Scenario fwd = sc;
    fwd.goals = {Vec3(4.5, 1.0, 0.0)};
    const auto row = compare_planners(fwd, sc.config, unconstrained_baseline(sc.config));
    CHECK(row.a.E_ap > 0.0);
    CHECK(row.ratio == doctest::Approx(1.0).epsilon(0.35));
  }
  SUBCASE("limits must match") {
    CHECK_THROWS_AS(compare_planners(sc, with_limits(sc.config, 1.0, 0.8),
                                     with_limits(sc.config, 1.2, 1.0)),
                    InputError);
  }
  SUBCASE("baseline differs only in the yaw constraint") {
    const auto b = unconstrained_baseline(sc.config);
    CHECK(b.planner.expansion.alpha == 0);
    CHECK_FALSE(b.planner.expansion.carry_yaw);
    CHECK(b.planner.expansion.v_max == sc.config.planner.expansion.v_max);
    CHECK(b.terrestrial.K_y == sc.config.terrestrial.K_y);
  }
}

TEST_CASE("cli exit codes") {
  const std::string dir = kScenarios.string();
  const auto out = scratch("cli");
  CHECK(run_cli("run " + dir + "/open_ground.scn --out " + out.string()) == 0);
  CHECK(fs::exists(out / "run.csv"));
  CHECK(run_cli("run " + dir + "/does_not_exist.scn") == 3);

  // A scenario whose goal is sealed off.
  const auto tmp = scratch("cli_sealed");
  {
    std::ofstream map(tmp / "sealed.txt");
    map << "origin 0 0 0 resolution 0.1 dims 30 30 10\n";
    for (int ix = 18; ix <= 25; ++ix)
      for (int iy = 18; iy <= 25; ++iy)
        for (int iz = 0; iz <= 7; ++iz) {
          const bool shell = ix == 18 || ix == 25 || iy == 18 || iy == 25 || iz == 7;
          if (shell) map << 0.1 * ix + 0.05 << ' ' << 0.1 * iy + 0.05 << ' ' << 0.1 * iz + 0.05 << '\n';
        }
    std::ofstream scn(tmp / "sealed.scn");
    scn << "[scenario]\nkind = closed_loop\nmap = sealed.txt\nstart = 0.5 0.5 0\ngoal = 2.2 2.2 0\n";
    std::ofstream bad(tmp / "bad.scn");
    bad << "[scenario]\nkind = closed_loop\nunknown_key = 1\n";
  }
  CHECK(run_cli("run " + (tmp / "sealed.scn").string()) == 2);
  CHECK(run_cli("run " + (tmp / "bad.scn").string()) == 3);
  CHECK(run_cli("compare " + (tmp / "bad.scn").string() + " --alpha 1") == 3);
}
