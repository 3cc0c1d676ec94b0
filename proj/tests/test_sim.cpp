#include "doctest.h"

#include "hybridnav/sim.hpp"

#include <sstream>

using namespace hybridnav;

namespace {

VoxelMap box_map(const Vec3& size, double res, const std::vector<std::pair<Vec3, Vec3>>& boxes) {
  const Vec3i dims((size / res).array().round().cast<int>());
  std::vector<Vec3> pts;
  for (const auto& [lo, hi] : boxes)
    for (double x = lo.x() + 0.5 * res; x < hi.x(); x += res)
      for (double y = lo.y() + 0.5 * res; y < hi.y(); y += res)
        for (double z = lo.z() + 0.5 * res; z < hi.z(); z += res) pts.emplace_back(x, y, z);
  return VoxelMap::from_point_cloud(pts, Vec3::Zero(), res, dims);
}

ControlCommand command(double f, const Vec3& w = Vec3::Zero()) {
  ControlCommand c;
  c.f_thr = f;
  c.body_rates = w;
  return c;
}

PlantState flying_at(const Vec3& p) {
  KinoState s;
  s.p = p;
  return make_plant(s);
}

double energy(const PlantState& ps, double g) {
  return 0.5 * ps.rs.v_hat.squaredNorm() + g * ps.rs.p_hat.z();
}

std::vector<std::string> mode_targets(const RunLog& log) {
  std::vector<std::string> out;
  for (const auto& e : log.events)
    if (e.kind == "mode") out.push_back(e.to);
  return out;
}

}  // namespace

TEST_CASE("step_crawl") {
  SimConfig cfg;
  const PlantState ps = make_plant(KinoState{});
  REQUIRE(ps.morphology == Morphology::Wheels);

  SUBCASE("throttle maps to forward speed") {
    const auto out = step_crawl(ps, command(0.1), 1.0, cfg);
    CHECK((out.rs.p_hat - Vec3(0.6854, 0, 0)).norm() < 1e-12);
    CHECK(out.rs.v_hat.x() == doctest::Approx(0.6854).epsilon(1e-12));
  }
  SUBCASE("zero throttle does not creep") {
    const auto out = step_crawl(ps, command(0.0), 1.0, cfg);
    CHECK(out.rs.p_hat == ps.rs.p_hat);
    CHECK(out.rs.yaw() == ps.rs.yaw());
  }
  SUBCASE("constant turn traces a circle of radius V / w") {
    const double f = 0.1, w = 1.0, V = 6.838 * f + 0.0016;
    PlantState s = ps;
    const Vec3 center(0.0, V / w, 0.0);
    double worst = 0.0;
    for (int i = 0; i < 6000; ++i) {
      s = step_crawl(s, command(f, {0, 0, w}), 1e-3, cfg);
      worst = std::max(worst, std::abs((s.rs.p_hat - center).norm() - V / w));
    }
    CHECK(worst < 0.01 * V / w);
  }
  SUBCASE("turn rate is limited by the turning radius") {
    const auto out = step_crawl(ps, command(0.1, {0, 0, 50.0}), 1e-3, cfg);
    const double V = 6.838 * 0.1 + 0.0016;
    CHECK(out.omega.z() == doctest::Approx(V / cfg.min_turn_radius));
  }
  SUBCASE("velocity stays on the body x-axis") {
    PlantState s = ps;
    for (int i = 0; i < 500; ++i) {
      s = step_crawl(s, command(0.05 + 0.0002 * i, {0, 0, std::sin(0.01 * i)}), 1e-3, cfg);
      const double yaw = s.rs.yaw();
      CHECK(std::abs(-std::sin(yaw) * s.rs.v_hat.x() + std::cos(yaw) * s.rs.v_hat.y()) < 1e-12);
      CHECK(s.rs.p_hat.z() == 0.0);
    }
  }
}

TEST_CASE("step_fly") {
  SimConfig cfg;
  const double dt = 1e-3;
  SUBCASE("hover") {
    PlantState s = flying_at({1, 1, 1});
    for (int i = 0; i < 100; ++i) {
      const auto n = step_fly(s, command(cfg.hover_throttle), dt, cfg);
      CHECK((n.rs.v_hat - s.rs.v_hat).norm() < 1e-9);
      s = n;
    }
  }
  SUBCASE("free fall") {
    const PlantState s = flying_at({0, 0, 5});
    const auto n = step_fly(s, command(0.0), dt, cfg);
    CHECK(n.rs.v_hat.z() == doctest::Approx(-9.81 * dt).epsilon(1e-12));
  }
  SUBCASE("double hover throttle accelerates upward at g") {
    const PlantState s = flying_at({0, 0, 1});
    const auto n = step_fly(s, command(2.0 * cfg.hover_throttle), dt, cfg);
    CHECK(n.rs.v_hat.z() / dt == doctest::Approx(9.81).epsilon(1e-9));
  }
  SUBCASE("ballistic energy drifts by O(dt) per step") {
    PlantState s = flying_at({0, 0, 8});
    s.rs.v_hat = {0.5, -0.3, 2.0};
    for (int i = 0; i < 1000; ++i) {
      const auto n = step_fly(s, command(0.0), dt, cfg);
      CHECK(std::abs(energy(n, cfg.gravity) - energy(s, cfg.gravity)) <= cfg.gravity * cfg.gravity * dt * dt);
      s = n;
    }
  }
  SUBCASE("body rates follow the command with a first-order lag") {
    PlantState s = flying_at({0, 0, 2});
    const Vec3 w(0.0, 0.0, 1.0);
    for (int i = 0; i < 50; ++i) s = step_fly(s, command(cfg.hover_throttle, w), dt, cfg);
    const double want = 1.0 - std::exp(-cfg.rate_bandwidth * 50 * dt);
    CHECK(s.omega.z() == doctest::Approx(want).epsilon(1e-9));
  }
  SUBCASE("touchdown settles") {
    PlantState s = flying_at({0, 0, 0.001});
    s.rs.v_hat = {0.2, 0.0, -1.0};
    s = step_fly(s, command(0.0), dt, cfg);
    CHECK(s.on_ground);
    CHECK(s.rs.p_hat.z() == 0.0);
    CHECK(s.rs.v_hat.isZero());
  }
}

TEST_CASE("deformation") {
  PlantState s = flying_at({0, 0, 0});
  s.rs.v_hat = {0.5, 0, 0};
  s = begin_deform(s);
  CHECK(s.morphology == Morphology::Deforming);
  CHECK(s.rs.v_hat.isZero());
  s = finish_deform(s, Morphology::Rotors);
  CHECK(s.morphology == Morphology::Rotors);
}

TEST_CASE("closed loop") {
  ClosedLoopConfig cfg;

  SUBCASE("open ground stays in crawling mode") {
    const auto map = box_map({8, 4, 2}, 0.1, {});
    KinoState start;
    start.p = {1, 2, 0};
    const auto log = run_closed_loop(start, {Vec3(6, 2, 0)}, map, cfg);
    CHECK(log.done);
    CHECK(mode_targets(log) == std::vector<std::string>{"Done"});
    CHECK((log.final_state.p_hat - Vec3(6, 2, 0)).norm() < cfg.mission.goal_tolerance);
    for (const auto& row : log.rows) {
      CHECK(row.phase == MissionPhase::Crawling);
      const double yaw = row.act.yaw();
      CHECK(std::abs(-std::sin(yaw) * row.act.v_hat.x() + std::cos(yaw) * row.act.v_hat.y()) <
            1e-12);
      CHECK(row.cmd.f_thr <= 0.2);
    }

    SUBCASE("deterministic") {
      const auto again = run_closed_loop(start, {Vec3(6, 2, 0)}, map, cfg);
      REQUIRE(again.rows.size() == log.rows.size());
      for (std::size_t i = 0; i < log.rows.size(); ++i) {
        CHECK(again.rows[i].act.p_hat == log.rows[i].act.p_hat);
        CHECK(again.rows[i].cmd.f_thr == log.rows[i].cmd.f_thr);
        CHECK(again.rows[i].cmd.body_rates == log.rows[i].cmd.body_rates);
      }
    }
  }

  SUBCASE("start at the goal") {
    const auto map = box_map({4, 4, 2}, 0.1, {});
    KinoState start;
    start.p = {2, 2, 0};
    const auto log = run_closed_loop(start, {Vec3(2, 2, 0)}, map, cfg);
    CHECK(log.done);
    CHECK(log.rows.empty());
    CHECK(log.end_time == 0.0);
  }

  SUBCASE("wall crossing runs the full transition sequence") {
    const auto map = box_map({8, 4, 2}, 0.1, {{{4.0, 0, 0}, {4.2, 4, 1.0}}}).inflate(0.2);
    KinoState start;
    start.p = {0.5, 2, 0};
    const auto log = run_closed_loop(start, {Vec3(6.5, 2, 0)}, map, cfg);
    CHECK(log.done);
    const std::vector<std::string> want{"CrawlToFlyDeform", "TakingOff", "Flying", "Landing",
                                        "FlyToCrawlDeform", "Crawling", "Done"};
    CHECK(mode_targets(log) == want);

    // The plant does not move while deforming.
    const LogRow* first = nullptr;
    for (const auto& row : log.rows) {
      const bool deform = row.phase == MissionPhase::CrawlToFlyDeform ||
                          row.phase == MissionPhase::FlyToCrawlDeform;
      if (!deform) {
        first = nullptr;
        continue;
      }
      if (!first) first = &row;
      CHECK(row.act.p_hat == first->act.p_hat);
      CHECK(row.act.v_hat.isZero());
    }

    // Setpoints forwarded to the controllers never straddle the threshold.
    const double thr = cfg.mission.z_threshold;
    for (const auto& row : log.rows) {
      if (row.action == ActionKind::TrackTerrestrial) CHECK(row.ref.p_d.z() < thr);
      if (row.action == ActionKind::TrackAerial) CHECK(row.ref.p_d.z() >= thr);
      if (row.phase == MissionPhase::Crawling) CHECK(row.act.p_hat.z() == 0.0);
    }

    std::ostringstream csv, events;
    write_run_csv(csv, log);
    write_events_jsonl(events, log);
    CHECK(csv.str().rfind("t,mode,ref_px,", 0) == 0);
    CHECK(events.str().find("\"Landing\"") != std::string::npos);
  }

  SUBCASE("enclosed goal fails to plan") {
    const auto map = box_map({3, 3, 1}, 0.1,
                             {{{1.8, 1.8, 0}, {2.6, 1.9, 0.8}},
                              {{1.8, 2.5, 0}, {2.6, 2.6, 0.8}},
                              {{1.8, 1.8, 0}, {1.9, 2.6, 0.8}},
                              {{2.5, 1.8, 0}, {2.6, 2.6, 0.8}},
                              {{1.8, 1.8, 0.7}, {2.6, 2.6, 0.8}}});
    KinoState start;
    start.p = {0.5, 0.5, 0};
    CHECK_THROWS_AS(run_closed_loop(start, {Vec3(2.2, 2.2, 0)}, map, cfg), PlanError);
  }
}

TEST_CASE("track_reference follows a straight line") {
  TrajectorySegment s;
  s.poly.duration = 5.0;
  s.poly.coeffs.col(0) = Vec3(0, 0, 0);
  s.poly.coeffs.col(1) = Vec3(0.5, 0, 0);
  const Trajectory ref({s}, 1e9);
  const auto log = track_reference(ref, TerrestrialGains{}, SimConfig{});
  const auto m = run_metrics(log);
  CHECK(m.E_mp < 0.05);
  CHECK(m.E_my < 1e-9);
  CHECK(log.rows.size() == 501);
}
