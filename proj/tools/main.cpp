// otshape command-line driver: run scenarios, render trajectory figures,
// list the catalog, and execute the verification suites.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "otshape/artifacts.hpp"
#include "otshape/render.hpp"
#include "otshape/scenario.hpp"
#include "otshape/verify.hpp"

namespace {

using namespace otshape;

ScenarioSpec resolve_scenario(const std::string& name_or_path) {
  if (std::filesystem::exists(name_or_path)) {
    return load_scenario(name_or_path);
  }
  return catalog_scenario(name_or_path);
}

int cmd_run(const std::string& scenario_arg,
            const std::vector<std::string>& overrides,
            const std::string& out_dir) {
  ScenarioSpec spec = resolve_scenario(scenario_arg);
  spec = apply_overrides(spec, overrides);
  const RunArtifacts artifacts = run_scenario(spec, out_dir);

  std::printf("scenario:   %s\n", spec.name.c_str());
  std::printf("converged:  %s after %d iterations\n",
              artifacts.converged ? "yes" : "no", artifacts.iterations);
  std::printf("total cost: %.6g\n", artifacts.final_cost.total);
  for (const CostTermValue& t : artifacts.final_cost.terms) {
    std::printf("  %-18s %.6g (weight %.4g)\n", t.label.c_str(), t.value,
                t.weight);
  }
  std::printf("wall time:  %.2f s\n", artifacts.wall_time_s);
  std::printf("trajectory: %s\n", artifacts.trajectory_csv.string().c_str());
  std::printf("costs:      %s\n", artifacts.cost_history_csv.string().c_str());
  std::printf("summary:    %s\n", artifacts.summary_json.string().c_str());
  return artifacts.converged ? 0 : 2;
}

int cmd_render(const std::string& traj_path, const std::string& scenario_path,
               const std::string& out_path, int stride, double opacity) {
  std::ifstream in(traj_path);
  if (!in) throw InvalidInputError("cannot open trajectory file: " + traj_path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const Trajectory traj = trajectory_from_csv(buffer.str());
  const ScenarioSpec spec = load_scenario(scenario_path);

  RenderOptions options;
  options.stride = stride;
  options.opacity = opacity;
  const std::string svg = render_svg(traj, spec, options);

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot write: " + out_path);
  out << svg;
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_scenarios_list() {
  for (const ScenarioSpec& spec : catalog_scenarios()) {
    std::string term_list;
    for (const CostTermConfig& cfg : spec.cost_terms) {
      if (!term_list.empty()) term_list += ", ";
      std::visit(
          [&term_list](const auto& t) {
            using T = std::decay_t<decltype(t)>;
            if constexpr (std::is_same_v<T, ShapeTermConfig>) {
              term_list += t.mode == ShapeCostSpec::Mode::Running
                               ? "shape_running"
                               : "shape_terminal";
            } else if constexpr (std::is_same_v<T, ControlEffortTerm>) {
              term_list += "control_effort";
            } else if constexpr (std::is_same_v<T, TerminalVelocityTerm>) {
              term_list += "terminal_velocity";
            } else if constexpr (std::is_same_v<T, CongestionTerm>) {
              term_list += "congestion";
            } else if constexpr (std::is_same_v<T, ObstacleTerm>) {
              term_list += "obstacle";
            } else {
              term_list += "mean_destination";
            }
          },
          cfg);
    }
    std::printf("%-18s %2d agents, %s\n", spec.name.c_str(),
                spec.agent_count(), term_list.c_str());
  }
  return 0;
}

void print_suite(const verify::SuiteResult& result) {
  for (const auto& check : result.checks) {
    std::printf("[%s] %-46s measured=%.3g  (%s)\n",
                check.pass ? "PASS" : "FAIL", check.name.c_str(),
                check.measured, check.detail.c_str());
  }
}

int cmd_verify(const std::string& suite) {
  verify::SuiteResult all;
  const std::uint64_t seed = 20240901;
  if (suite == "ot" || suite == "all") {
    const auto r = verify::run_ot_suite(seed);
    print_suite(r);
    all.checks.insert(all.checks.end(), r.checks.begin(), r.checks.end());
  }
  if (suite == "gradients" || suite == "all") {
    const auto r = verify::run_gradient_suite(seed);
    print_suite(r);
    all.checks.insert(all.checks.end(), r.checks.begin(), r.checks.end());
  }
  if (suite == "lqr" || suite == "all") {
    const auto r = verify::run_lqr_suite();
    print_suite(r);
    all.checks.insert(all.checks.end(), r.checks.begin(), r.checks.end());
  }
  if (all.checks.empty()) {
    std::fprintf(stderr, "unknown suite \"%s\" (ot, gradients, lqr, all)\n",
                 suite.c_str());
    return 1;
  }
  return all.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-agent trajectory optimization with optimal-transport "
               "shape costs"};
  app.require_subcommand(1);

  std::string scenario_arg, out_dir = "out";
  std::vector<std::string> overrides;
  auto* run = app.add_subcommand("run", "optimize a catalog or file scenario");
  run->add_option("scenario", scenario_arg, "catalog name or scenario.json path")
      ->required();
  run->add_option("--set", overrides, "override, dotted path key=value");
  run->add_option("--out", out_dir, "output directory (default: out)");

  std::string traj_path, scenario_path, svg_path;
  int stride = 1;
  double opacity = 0.25;
  auto* render = app.add_subcommand("render", "render a run as a static SVG");
  render->add_option("trajectory", traj_path, "trajectory CSV")->required();
  render->add_option("scenario", scenario_path, "scenario JSON")->required();
  render->add_option("output", svg_path, "output SVG path")->required();
  render->add_option("--stride", stride, "keep every Nth intermediate frame");
  render->add_option("--opacity", opacity, "intermediate marker opacity");

  auto* scenarios = app.add_subcommand("scenarios", "catalog utilities");
  auto* list = scenarios->add_subcommand("list", "list catalog scenarios");

  std::string suite;
  auto* verify_cmd = app.add_subcommand("verify", "run verification suites");
  verify_cmd->add_option("suite", suite, "ot | gradients | lqr | all")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(scenario_arg, overrides, out_dir);
    if (render->parsed()) {
      return cmd_render(traj_path, scenario_path, svg_path, stride, opacity);
    }
    if (scenarios->parsed() && list->parsed()) return cmd_scenarios_list();
    if (verify_cmd->parsed()) return cmd_verify(suite);
    std::fprintf(stderr, "no command given\n");
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
