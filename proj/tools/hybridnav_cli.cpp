// Scenario runner: `hybridnav run <scenario>` and `hybridnav compare <scenario> --alpha A`.
#include "hybridnav/bench.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

constexpr int kExitPlanFailure = 2;
constexpr int kExitParseError = 3;

void print_summary(const hybridnav::BenchReport& report) {
  for (const auto& run : report.runs) {
    const auto& m = run.metrics;
    std::printf("%s: done=%s end_time=%.2f E_ap=%.4f E_mp=%.4f E_ay=%.4f E_my=%.4f\n",
                run.label.c_str(), run.done ? "yes" : "no", run.end_time, m.E_ap, m.E_mp, m.E_ay,
                m.E_my);
    std::string seq;
    for (const auto& ev : run.events)
      if (ev.kind == "mode") seq += (seq.empty() ? "" : " -> ") + ev.to;
    if (!seq.empty()) std::printf("  modes: %s\n", seq.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Terrestrial-aerial navigation benchmark"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir;
  unsigned seed = 0;
  double sample_step = 0.0;
  auto* run = app.add_subcommand("run", "Execute a scenario and write its logs");
  run->add_option("scenario", scenario_path, "Scenario file")->required();
  run->add_option("--out", out_dir, "Output directory");
  auto* seed_opt = run->add_option("--seed", seed, "Perturb the start pose (1 cm, 1 deg)");
  auto* step_opt = run->add_option("--sample-step", sample_step, "Trajectory CSV step (s)")
                       ->check(CLI::PositiveNumber);

  int alpha = 1;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "Constrained planner against the alpha=0 baseline");
  compare->add_option("scenario", scenario_path, "Scenario file")->required();
  compare->add_option("--alpha", alpha, "Body-x input lower bound index")->required();
  compare->add_option("--out", compare_out, "Write the comparison rows as JSON here");

  CLI11_PARSE(app, argc, argv);

  try {
    const hybridnav::Scenario scenario = hybridnav::load_scenario(scenario_path);
    if (*run) {
      hybridnav::RunOptions opts;
      if (!out_dir.empty()) opts.out_dir = out_dir;
      if (*seed_opt) opts.seed = seed;
      if (*step_opt) opts.sample_step = sample_step;
      print_summary(hybridnav::run_scenario(scenario, opts));
    } else {
      nlohmann::json rows = nlohmann::json::array();
      std::printf("%-8s %-8s %-10s %-10s %-10s %-10s %-8s\n", "v_m", "a_m", "E_ap(a)", "E_mp(a)",
                  "E_ap(b)", "E_mp(b)", "ratio");
      for (const auto& row : hybridnav::compare_scenario(scenario, alpha)) {
        std::printf("%-8.2f %-8.2f %-10.4f %-10.4f %-10.4f %-10.4f %-8.3f\n", row.v_max, row.a_max,
                    row.a.E_ap, row.a.E_mp, row.b.E_ap, row.b.E_mp, row.ratio);
        rows.push_back({{"v_max", row.v_max},
                        {"a_max", row.a_max},
                        {row.label_a, nlohmann::json::parse(hybridnav::metrics_json(row.a))},
                        {row.label_b, nlohmann::json::parse(hybridnav::metrics_json(row.b))},
                        {"ratio", row.ratio}});
      }
      if (!compare_out.empty()) {
        std::ofstream out(compare_out);
        out << rows.dump(2) << '\n';
      }
    }
  } catch (const hybridnav::PlanError& e) {
    std::cerr << "plan failed: " << e.what() << '\n';
    return kExitPlanFailure;
  } catch (const hybridnav::RunTimeout& e) {
    std::cerr << "timeout: " << e.what() << '\n';
    return kExitPlanFailure;
  } catch (const hybridnav::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitParseError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
