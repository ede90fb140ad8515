#include <doctest.h>

#include <cmath>
#include <random>

#include "otshape/scenario.hpp"
#include "otshape/shooting.hpp"
#include "otshape/verify.hpp"

using namespace otshape;

namespace {

ScenarioSpec effort_only_scenario(int agents, int steps) {
  ScenarioSpec spec;
  spec.name = "effort-only";
  GridParams grid;
  grid.rows = 1;
  grid.cols = agents;
  grid.spacing = 0.5;
  spec.initial = grid;
  spec.horizon = 1.0;
  spec.steps = steps;
  spec.cost_terms = {ControlEffortTerm{1.0}};
  return spec;
}

ControlSchedule random_schedule(const ScenarioSpec& spec, unsigned seed,
                                double scale = 1.0) {
  ControlSchedule schedule(spec.agent_count(), spec.steps, spec.dt());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (Vec2& u : schedule.controls.values) u = Vec2(dist(rng), dist(rng));
  return schedule;
}

}  // namespace

TEST_SUITE("shooting") {

TEST_CASE("gradient: control effort only reduces to dt * u") {
  const ScenarioSpec spec = effort_only_scenario(2, 8);
  const ControlSchedule schedule = random_schedule(spec, 3);
  const GradientResult result = cost_and_gradient(schedule, spec);
  for (int i = 0; i < 2; ++i) {
    for (int s = 0; s < 8; ++s) {
      const Vec2 expected = spec.dt() * schedule.controls.at(i, s);
      CHECK(result.gradient.at(i, s).x() == doctest::Approx(expected.x()));
      CHECK(result.gradient.at(i, s).y() == doctest::Approx(expected.y()));
    }
  }
}

TEST_CASE("gradient: closed-form sensitivity of a terminal position cost") {
  // single agent, J = |p(T) - p*|^2 / 2; dJ/du_s = dt^2 (S-1-s) (p(T) - p*)
  ScenarioSpec spec;
  spec.name = "terminal-position";
  spec.initial = std::vector<Vec2>{{0.2, -0.1}};
  spec.horizon = 1.0;
  spec.steps = 10;
  const Vec2 target(1.0, 2.0);
  spec.cost_terms = {MeanDestinationTerm{1.0, target}};

  const ControlSchedule schedule = random_schedule(spec, 5);
  const auto traj = rollout(spec.initial_states(), schedule);
  const Vec2 err = traj.state(0, 10).position - target;

  const GradientResult result = cost_and_gradient(schedule, spec);
  const double dt = spec.dt();
  for (int s = 0; s < 10; ++s) {
    const Vec2 expected = dt * dt * (10 - 1 - s) * err;
    CHECK(result.gradient.at(0, s).x() ==
          doctest::Approx(expected.x()).epsilon(1e-12));
    CHECK(result.gradient.at(0, s).y() ==
          doctest::Approx(expected.y()).epsilon(1e-12));
  }
}

TEST_CASE("gradient: finite differences across a mixed scenario") {
  ScenarioSpec spec;
  spec.name = "mixed";
  GridParams grid;
  grid.rows = 2;
  grid.cols = 3;
  grid.spacing = 0.4;
  grid.anchor = Vec2(0.1, 0.0);
  spec.initial = grid;
  spec.horizon = 1.0;
  spec.steps = 12;

  ShapeTermConfig running;
  running.mode = ShapeCostSpec::Mode::Running;
  running.weight = 1.5;
  running.centered = true;
  running.reference = std::vector<Vec2>{{0.0, 0.4}, {0.3, -0.4}, {-0.3, 0.0}};
  ShapeTermConfig terminal;
  terminal.mode = ShapeCostSpec::Mode::Terminal;
  terminal.weight = 2.0;
  terminal.reference =
      std::vector<Vec2>{{1.0, 0.5}, {1.2, -0.5}, {0.8, 0.0}, {1.4, 0.2}};
  spec.cost_terms = {running, terminal, ControlEffortTerm{0.5},
                     TerminalVelocityTerm{1.0}, CongestionTerm{0.3, 0.25},
                     MeanDestinationTerm{1.0, Vec2(1.0, 0.0)}};

  const ControlSchedule schedule = random_schedule(spec, 7);
  GradientCheckOptions options;
  options.n_probes = 40;
  options.fd_step = 1e-6;
  options.seed = 99;
  const GradientCheckReport report = check_gradient(spec, schedule, options);
  CHECK(report.probes_checked >= 30);
  CHECK(report.max_rel_error < 1e-5);
}

TEST_CASE("gradient: transport-free scenarios agree with FD to 1e-7") {
  // every smooth explicit term at once; the only error budget left is
  // floating point
  ScenarioSpec spec;
  spec.name = "smooth-only";
  GridParams grid;
  grid.rows = 2;
  grid.cols = 3;
  grid.spacing = 0.35;
  spec.initial = grid;
  spec.horizon = 1.0;
  spec.steps = 10;
  ObstacleTerm obstacle;
  obstacle.weight = 0.8;
  obstacle.obstacles = {ObstacleSpec{Vec2(0.9, 0.3), 0.3, 1.5, 3.0}};
  spec.cost_terms = {ControlEffortTerm{0.7}, TerminalVelocityTerm{1.3},
                     CongestionTerm{0.4, 0.3}, obstacle,
                     MeanDestinationTerm{1.1, Vec2(1.5, -0.4)}};

  const ControlSchedule schedule = random_schedule(spec, 21, 0.8);
  GradientCheckOptions options;
  options.n_probes = 40;
  options.fd_step = 1e-6;
  const GradientCheckReport report = check_gradient(spec, schedule, options);
  CHECK(report.probes_checked == 40);
  CHECK(report.max_rel_error < 1e-7);
}

TEST_CASE("check_gradient: exact on a pure quadratic with a wide step") {
  const ScenarioSpec spec = effort_only_scenario(2, 10);
  const ControlSchedule schedule = random_schedule(spec, 11);
  GradientCheckOptions options;
  options.n_probes = 40;  // all coordinates
  options.fd_step = 1e-2;
  const GradientCheckReport report = check_gradient(spec, schedule, options);
  CHECK(report.probes_checked == 40);
  CHECK(report.probes_skipped == 0);
  CHECK(report.max_rel_error < 1e-9);
}

TEST_CASE("check_gradient: flags an injected corruption") {
  const ScenarioSpec spec = effort_only_scenario(1, 6);
  const ControlSchedule schedule = random_schedule(spec, 13);
  GradientResult honest = cost_and_gradient(schedule, spec);
  ControlGrid corrupted = honest.gradient;
  corrupted.at(0, 4).x() *= 2.0;

  GradientCheckOptions options;
  options.n_probes = 12;  // every coordinate
  options.fd_step = 1e-4;
  const GradientCheckReport report =
      check_gradient(spec, schedule, options, &corrupted);
  CHECK(report.max_rel_error > 1e-3);
  CHECK(report.worst.agent == 0);
  CHECK(report.worst.step == 4);
  CHECK(report.worst.axis == 0);
}

TEST_CASE("check_gradient: symmetric ties are detected as degenerate") {
  // two agents equidistant from both references: the optimal plan flips
  // support under any vertical perturbation
  ScenarioSpec spec;
  spec.name = "degenerate";
  spec.initial = std::vector<Vec2>{{0.0, 0.0}, {1.0, 0.0}};
  spec.horizon = 1.0;
  spec.steps = 4;
  ShapeTermConfig shape;
  shape.mode = ShapeCostSpec::Mode::Terminal;
  shape.weight = 1.0;
  shape.reference = std::vector<Vec2>{{0.5, 0.5}, {0.5, -0.5}};
  spec.cost_terms = {shape};

  ControlSchedule schedule(2, 4, spec.dt());  // zeros keep the symmetry
  GradientCheckOptions options;
  options.n_probes = 16;  // every coordinate
  options.fd_step = 1e-6;
  const GradientCheckReport report = check_gradient(spec, schedule, options);
  CHECK(report.probes_skipped > 0);
}

TEST_CASE("optimize: a stationary point converges in one iteration") {
  const ScenarioSpec spec = effort_only_scenario(2, 6);
  OptimizerOptions options;
  options.alpha = 0.5;
  options.tol = 1e-10;
  const OptimizationResult result = optimize(spec, options);
  CHECK(result.converged);
  CHECK(result.iterations_run == 1);
  for (const Vec2& u : result.schedule.controls.values) {
    CHECK(u.x() == 0.0);
    CHECK(u.y() == 0.0);
  }
}

TEST_CASE("optimize: reaches the Riccati solution on one LQR case") {
  verify::LqrProblem problem;
  problem.dt = 0.05;
  problem.steps = 20;
  problem.target = Vec2(1.5, 1.0);
  const ControlGrid oracle = verify::solve_lqr_riccati(problem);

  ScenarioSpec spec;
  spec.name = "lqr";
  spec.initial = std::vector<Vec2>{{0.0, 0.0}};
  spec.horizon = 1.0;
  spec.steps = 20;
  spec.cost_terms = {MeanDestinationTerm{1.0, problem.target},
                     ControlEffortTerm{1.0}};
  OptimizerOptions options;
  options.alpha = 10.0;
  options.tol = 1e-9;
  options.max_iters = 100000;
  const OptimizationResult result = optimize(spec, options);
  REQUIRE(result.converged);
  double max_diff = 0.0;
  for (int s = 0; s < 20; ++s) {
    const Vec2 d = result.schedule.controls.at(0, s) - oracle.at(0, s);
    max_diff = std::max({max_diff, std::abs(d.x()), std::abs(d.y())});
  }
  CHECK(max_diff < 1e-4);
}

TEST_CASE("optimize: sinkhorn-backed shape term reproduces the split") {
  ScenarioSpec spec = catalog_scenario("prop-split");
  for (CostTermConfig& cfg : spec.cost_terms) {
    if (auto* shape = std::get_if<ShapeTermConfig>(&cfg)) {
      shape->solver = SolverTag::Sinkhorn;
      shape->sinkhorn.epsilon = 5e-3;
      shape->sinkhorn.max_iter = 5000;
      shape->sinkhorn.tol = 1e-9;
    }
  }
  OptimizerOptions options = spec.optimizer;
  options.max_iters = 4000;
  options.tol = 1e-5;
  const OptimizationResult run = optimize(spec, options);
  int near_upper = 0, near_lower = 0;
  for (int i = 0; i < run.trajectory.agents; ++i) {
    const Vec2 p = run.trajectory.state(i, run.trajectory.steps).position;
    if ((p - Vec2(2.0, 1.5)).norm() <= 0.25) ++near_upper;
    if ((p - Vec2(2.0, -1.5)).norm() <= 0.25) ++near_lower;
  }
  CHECK(near_upper == 8);
  CHECK(near_lower == 12);
}

TEST_CASE("optimize: safeguarded descent never increases the total") {
  ScenarioSpec spec = catalog_scenario("prop-split");
  OptimizerOptions options = spec.optimizer;
  options.max_iters = 300;
  options.record_every = 1;
  const OptimizationResult result = optimize(spec, options);
  REQUIRE(result.cost_history.size() > 2);
  for (size_t k = 1; k < result.cost_history.size(); ++k) {
    CHECK(result.cost_history[k].second.total <=
          result.cost_history[k - 1].second.total + 1e-12);
  }
  CHECK(result.cost_history.back().second.total <
        result.cost_history.front().second.total);
}

TEST_CASE("optimize: deterministic across repeated runs") {
  ScenarioSpec spec = catalog_scenario("running-pincer");
  OptimizerOptions options = spec.optimizer;
  options.max_iters = 120;
  const OptimizationResult a = optimize(spec, options);
  const OptimizationResult b = optimize(spec, options);
  REQUIRE(a.schedule.controls.values.size() ==
          b.schedule.controls.values.size());
  for (size_t k = 0; k < a.schedule.controls.values.size(); ++k) {
    CHECK(a.schedule.controls.values[k] == b.schedule.controls.values[k]);
  }
  for (size_t k = 0; k < a.trajectory.states.size(); ++k) {
    CHECK(a.trajectory.states[k].position == b.trajectory.states[k].position);
  }
}

TEST_CASE("optimize: runaway step without the safeguard diverges loudly") {
  ScenarioSpec spec;
  spec.name = "diverge";
  spec.initial = std::vector<Vec2>{{0.0, 0.0}};
  spec.horizon = 1.0;
  spec.steps = 10;
  spec.cost_terms = {MeanDestinationTerm{1000.0, Vec2(5.0, 0.0)},
                     ControlEffortTerm{1.0}};
  OptimizerOptions options;
  options.alpha = 1e6;
  options.safeguard = false;
  options.max_iters = 50;
  CHECK_THROWS_AS(optimize(spec, options), DivergenceError);
}

TEST_CASE("optimize: zeros and warm start agree on a convex problem") {
  ScenarioSpec spec;
  spec.name = "convex";
  spec.initial = std::vector<Vec2>{{0.0, 0.0}, {0.5, -0.5}};
  spec.horizon = 1.0;
  spec.steps = 25;
  spec.cost_terms = {MeanDestinationTerm{2.0, Vec2(1.5, 0.5)},
                     ControlEffortTerm{1.0}, TerminalVelocityTerm{1.0}};
  OptimizerOptions options;
  options.alpha = 5.0;
  options.tol = 1e-8;
  options.max_iters = 200000;

  options.init = OptimizerOptions::Init::Zeros;
  const OptimizationResult cold = optimize(spec, options);
  options.init = OptimizerOptions::Init::StraightLine;
  const OptimizationResult warm = optimize(spec, options);
  REQUIRE(cold.converged);
  REQUIRE(warm.converged);
  CHECK(warm.cost_history.back().second.total ==
        doctest::Approx(cold.cost_history.back().second.total).epsilon(1e-8));
  for (size_t k = 0; k < cold.schedule.controls.values.size(); ++k) {
    CHECK((warm.schedule.controls.values[k] - cold.schedule.controls.values[k])
              .norm() < 1e-4);
  }
}

TEST_CASE("initial_schedule: straight-line warm start is rest-to-rest") {
  ScenarioSpec spec;
  spec.name = "warm";
  spec.initial = std::vector<Vec2>{{0.0, 0.0}};
  spec.horizon = 1.0;
  spec.steps = 10;
  spec.cost_terms = {MeanDestinationTerm{1.0, Vec2(2.0, 0.0)},
                     ControlEffortTerm{1.0}};
  const ControlSchedule warm =
      initial_schedule(spec, OptimizerOptions::Init::StraightLine);
  const auto traj = rollout(spec.initial_states(), warm);
  CHECK(traj.state(0, 10).position.x() == doctest::Approx(2.0).epsilon(0.15));
  CHECK(traj.state(0, 10).velocity.norm() < 0.5);
}

}  // TEST_SUITE
