#include <doctest.h>

#include <cmath>
#include <random>

#include "otshape/costs.hpp"
#include "otshape/scenario.hpp"
#include "otshape/verify.hpp"

using namespace otshape;

namespace {

std::vector<AgentState> states_at(const std::vector<Vec2>& positions) {
  std::vector<AgentState> out(positions.size());
  for (size_t i = 0; i < positions.size(); ++i) out[i].position = positions[i];
  return out;
}

double rel_error(double analytic, double fd) {
  return std::abs(analytic - fd) /
         std::max({1.0, std::abs(analytic), std::abs(fd)});
}

// Central finite differences on agent positions.
template <typename F>
std::vector<Vec2> fd_position_gradient(std::vector<AgentState> states, F value,
                                       double h = 1e-6) {
  std::vector<Vec2> grad(states.size(), Vec2::Zero());
  for (size_t i = 0; i < states.size(); ++i) {
    for (int axis = 0; axis < 2; ++axis) {
      states[i].position[axis] += h;
      const double plus = value(states);
      states[i].position[axis] -= 2 * h;
      const double minus = value(states);
      states[i].position[axis] += h;
      grad[i][axis] = (plus - minus) / (2 * h);
    }
  }
  return grad;
}

ShapeCostSpec terminal_spec(std::vector<Vec2> refs,
                            Eigen::VectorXd weights = {}) {
  ShapeCostSpec spec;
  const auto m = static_cast<Eigen::Index>(refs.size());
  spec.reference = DiscreteMeasure(
      std::move(refs), weights.size() ? weights : Eigen::VectorXd::Ones(m));
  spec.mode = ShapeCostSpec::Mode::Terminal;
  return spec;
}

ShapeCostSpec running_spec(std::vector<Vec2> refs) {
  ShapeCostSpec spec = terminal_spec(std::move(refs));
  spec.mode = ShapeCostSpec::Mode::Running;
  spec.centered = true;
  return spec;
}

}  // namespace

TEST_SUITE("costs") {

TEST_CASE("terminal shape: perfect match costs nothing") {
  const std::vector<Vec2> pts{{0.0, 0.0}, {1.0, 0.0}, {0.5, 1.0}};
  const auto result = terminal_shape_cost(states_at(pts), terminal_spec(pts));
  CHECK(result.value == doctest::Approx(0.0).epsilon(1e-15));
  for (const Vec2& g : result.position_gradient) {
    CHECK(g.norm() == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("terminal shape: single pair value and gradient by hand") {
  const auto result = terminal_shape_cost(states_at({{0.0, 0.0}}),
                                          terminal_spec({{1.0, 0.0}}));
  CHECK(result.value == doctest::Approx(1.0));
  CHECK(result.position_gradient[0].x() == doctest::Approx(-2.0));
  CHECK(result.position_gradient[0].y() == doctest::Approx(0.0));
}

TEST_CASE("terminal shape: equals permutation oracle over 3 agents") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vec2> agents(3), refs(3);
    for (auto& p : agents) p = Vec2(unit(rng), unit(rng));
    for (auto& p : refs) p = Vec2(unit(rng), unit(rng));
    const auto result =
        terminal_shape_cost(states_at(agents), terminal_spec(refs));
    const double oracle = verify::brute_force_assignment_value(
                              squared_distance_matrix(agents, refs)) /
                          3.0;
    CHECK(result.value == doctest::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("terminal shape: finite-difference gradient audit") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Vec2> agents(5), refs(4);
  for (auto& p : agents) p = Vec2(unit(rng), unit(rng));
  for (auto& p : refs) p = Vec2(unit(rng), unit(rng));
  Eigen::VectorXd b(4);
  b << 1.0, 2.0, 1.5, 0.5;
  const ShapeCostSpec spec = terminal_spec(refs, b);

  const auto result = terminal_shape_cost(states_at(agents), spec);
  const auto fd = fd_position_gradient(
      states_at(agents), [&](const std::vector<AgentState>& s) {
        return terminal_shape_cost(s, spec).value;
      });
  for (size_t i = 0; i < agents.size(); ++i) {
    CHECK(rel_error(result.position_gradient[i].x(), fd[i].x()) < 1e-5);
    CHECK(rel_error(result.position_gradient[i].y(), fd[i].y()) < 1e-5);
  }
}

TEST_CASE("running shape: translation has no effect") {
  const std::vector<Vec2> refs{{0.0, 0.0}, {1.0, 0.0}, {0.5, 0.8}};
  std::vector<Vec2> agents = refs;
  for (Vec2& p : agents) p += Vec2(5.0, 5.0);
  const auto result = running_shape_cost(states_at(agents), running_spec(refs));
  CHECK(result.value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("running shape: hand-computed centered value") {
  const auto result =
      running_shape_cost(states_at({{0.0, 0.0}, {2.0, 0.0}}),
                         running_spec({{10.0, 0.0}, {11.0, 0.0}}));
  CHECK(result.value == doctest::Approx(0.25));
}

TEST_CASE("running shape: single agent vs single reference is always zero") {
  const auto result = running_shape_cost(states_at({{3.0, -2.0}}),
                                         running_spec({{100.0, 7.0}}));
  CHECK(result.value == doctest::Approx(0.0));
}

TEST_CASE("running shape: gradient includes the mean-subtraction correction") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Vec2> agents(4), refs(3);
  for (auto& p : agents) p = Vec2(unit(rng), unit(rng));
  for (auto& p : refs) p = Vec2(unit(rng), unit(rng));
  const ShapeCostSpec spec = running_spec(refs);

  const auto result = running_shape_cost(states_at(agents), spec);
  const auto fd = fd_position_gradient(
      states_at(agents), [&](const std::vector<AgentState>& s) {
        return running_shape_cost(s, spec).value;
      });
  for (size_t i = 0; i < agents.size(); ++i) {
    CHECK(rel_error(result.position_gradient[i].x(), fd[i].x()) < 1e-5);
    CHECK(rel_error(result.position_gradient[i].y(), fd[i].y()) < 1e-5);
  }
  // per-agent gradients of a translation-invariant cost sum to zero
  Vec2 sum = Vec2::Zero();
  for (const Vec2& g : result.position_gradient) sum += g;
  CHECK(sum.norm() < 1e-12);
}

TEST_CASE("shape specs: wrong mode or uncentered running spec rejected") {
  const auto pts = states_at({{0.0, 0.0}, {1.0, 1.0}});
  CHECK_THROWS_AS(running_shape_cost(pts, terminal_spec({{0.0, 0.0}})),
                  InvalidInputError);
  CHECK_THROWS_AS(terminal_shape_cost(pts, running_spec({{0.0, 0.0}})),
                  InvalidInputError);
  ShapeCostSpec uncentered = running_spec({{0.0, 0.0}});
  uncentered.centered = false;
  CHECK_THROWS_AS(running_shape_cost(pts, uncentered), InvalidInputError);
}

TEST_CASE("control effort: zero, hand value, quadratic scaling") {
  ControlSchedule zero(2, 5, 0.1);
  CHECK(control_effort(zero).first == doctest::Approx(0.0));

  ControlSchedule one(1, 1, 0.1);
  one.controls.at(0, 0) = Vec2(3.0, 4.0);
  const auto [value, grad] = control_effort(one);
  CHECK(value == doctest::Approx(1.25));
  CHECK(grad.at(0, 0).x() == doctest::Approx(0.3));
  CHECK(grad.at(0, 0).y() == doctest::Approx(0.4));

  ControlSchedule doubled = one;
  doubled.controls.at(0, 0) *= 2.0;
  CHECK(control_effort(doubled).first == doctest::Approx(4.0 * value));
}

TEST_CASE("terminal velocity: rest, single agent, mean over agents") {
  std::vector<AgentState> rest(3);
  CHECK(terminal_velocity_cost(rest).first == doctest::Approx(0.0));

  std::vector<AgentState> one(1);
  one[0].velocity = Vec2(3.0, 4.0);
  CHECK(terminal_velocity_cost(one).first == doctest::Approx(12.5));

  std::vector<AgentState> two(2);
  two[0].velocity = Vec2(1.0, 0.0);
  two[1].velocity = Vec2(0.0, 1.0);
  const auto [value, grad] = terminal_velocity_cost(two);
  CHECK(value == doctest::Approx(0.5));
  CHECK(grad[0].x() == doctest::Approx(0.5));
  CHECK(grad[1].y() == doctest::Approx(0.5));
}

TEST_CASE("congestion: coincident, far-field, and sigma-distance pairs") {
  // two coincident agents: diagonal 2 plus exp(0) per ordered off-diag pair
  std::vector<AgentState> coincident(2);
  CHECK(congestion_penalty(coincident, 0.15).first == doctest::Approx(4.0));

  std::vector<AgentState> far(2);
  far[1].position = Vec2(1.5, 0.0);  // 10 sigma
  CHECK(congestion_penalty(far, 0.15).first ==
        doctest::Approx(2.0).epsilon(1e-12));

  std::vector<AgentState> at_sigma(2);
  at_sigma[1].position = Vec2(0.15, 0.0);
  CHECK(congestion_penalty(at_sigma, 0.15).first ==
        doctest::Approx(2.0 + 2.0 * std::exp(-0.5)));
}

TEST_CASE("congestion: finite-difference gradient audit") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> unit(-0.4, 0.4);
  std::vector<Vec2> pts(6);
  for (auto& p : pts) p = Vec2(unit(rng), unit(rng));
  const auto states = states_at(pts);
  const auto [value, grad] = congestion_penalty(states, 0.15);
  const auto fd = fd_position_gradient(states, [](const auto& s) {
    return congestion_penalty(s, 0.15).first;
  });
  for (size_t i = 0; i < pts.size(); ++i) {
    CHECK(rel_error(grad[i].x(), fd[i].x()) < 1e-5);
    CHECK(rel_error(grad[i].y(), fd[i].y()) < 1e-5);
  }
}

TEST_CASE("congestion: shrinking every pairwise distance raises the penalty") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  std::vector<Vec2> pts(5);
  for (auto& p : pts) p = Vec2(unit(rng), unit(rng));
  Vec2 centroid = Vec2::Zero();
  for (const Vec2& p : pts) centroid += p;
  centroid /= 5.0;
  std::vector<Vec2> spread = pts;
  for (Vec2& p : spread) p = centroid + 1.5 * (p - centroid);
  CHECK(congestion_penalty(states_at(spread), 0.2).first <
        congestion_penalty(states_at(pts), 0.2).first);
}

TEST_CASE("congestion: symmetric under relabeling") {
  const std::vector<Vec2> pts{{0.0, 0.0}, {0.2, 0.1}, {-0.1, 0.3}};
  const std::vector<Vec2> relabeled{pts[2], pts[0], pts[1]};
  CHECK(congestion_penalty(states_at(pts), 0.15).first ==
        doctest::Approx(congestion_penalty(states_at(relabeled), 0.15).first));
}

TEST_CASE("obstacle: far field, center, and one hand-computed point") {
  const std::vector<ObstacleSpec> obstacles{
      ObstacleSpec{Vec2(0.0, 0.0), 0.5, 1.0, 4.0}};

  std::vector<AgentState> far(1);
  far[0].position = Vec2(10.0, 0.0);
  CHECK(obstacle_penalty(far, obstacles).first ==
        doctest::Approx(0.0).epsilon(1e-12));

  std::vector<AgentState> at_center(1);
  CHECK(obstacle_penalty(at_center, obstacles).first == doctest::Approx(1.0));

  std::vector<AgentState> outside(1);
  outside[0].position = Vec2(1.0, 0.0);
  CHECK(obstacle_penalty(outside, obstacles).first ==
        doctest::Approx(std::exp(-3.0)));
}

TEST_CASE("obstacle: finite-difference gradient audit outside the disk") {
  const std::vector<ObstacleSpec> obstacles{
      ObstacleSpec{Vec2(0.3, -0.2), 0.4, 2.0, 3.0}};
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> unit(0.8, 1.6);
  std::vector<Vec2> pts(4);
  for (auto& p : pts) p = Vec2(unit(rng), unit(rng));
  const auto states = states_at(pts);
  const auto [value, grad] = obstacle_penalty(states, obstacles);
  const auto fd = fd_position_gradient(states, [&](const auto& s) {
    return obstacle_penalty(s, obstacles).first;
  });
  for (size_t i = 0; i < pts.size(); ++i) {
    CHECK(rel_error(grad[i].x(), fd[i].x()) < 1e-5);
    CHECK(rel_error(grad[i].y(), fd[i].y()) < 1e-5);
  }
}

TEST_CASE("terminal shape: sinkhorn solver tracks the exact solver") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<Vec2> agents(6), refs(6);
  for (auto& p : agents) p = Vec2(unit(rng), unit(rng));
  for (auto& p : refs) p = Vec2(unit(rng), unit(rng));

  const ShapeCostSpec exact_spec = terminal_spec(refs);
  const auto exact = terminal_shape_cost(states_at(agents), exact_spec);

  ShapeCostSpec approx_spec = exact_spec;
  approx_spec.solver = SolverTag::Sinkhorn;
  approx_spec.sinkhorn.epsilon =
      1e-3 * squared_distance_matrix(agents, refs).entries.mean();
  approx_spec.sinkhorn.max_iter = 100000;
  approx_spec.sinkhorn.tol = 1e-9;
  const auto approx = terminal_shape_cost(states_at(agents), approx_spec);
  CHECK(approx.plan.solver_tag == SolverTag::Sinkhorn);
  CHECK(std::abs(approx.value - exact.value) / exact.value < 0.01);
  for (size_t i = 0; i < agents.size(); ++i) {
    CHECK((approx.position_gradient[i] - exact.position_gradient[i]).norm() <
          0.01 * (1.0 + exact.position_gradient[i].norm()));
  }
}

TEST_CASE("mean destination: value and uniform gradient") {
  std::vector<AgentState> agents(2);
  agents[0].position = Vec2(1.0, 0.0);
  agents[1].position = Vec2(3.0, 2.0);  // mean (2, 1)
  const auto [value, grad] = mean_destination_cost(agents, Vec2(2.0, 0.0));
  CHECK(value == doctest::Approx(0.5));  // |(0,1)|^2 / 2
  CHECK(grad[0].x() == doctest::Approx(0.0));
  CHECK(grad[0].y() == doctest::Approx(0.5));
  CHECK(grad[1] == grad[0]);
}

TEST_CASE("terminal shape: permutation equivariance") {
  const std::vector<Vec2> agents{{0.0, 0.1}, {1.0, -0.2}, {0.4, 0.9}};
  const std::vector<Vec2> refs{{1.0, 1.0}, {0.0, -1.0}, {-0.5, 0.2}};
  const ShapeCostSpec spec = terminal_spec(refs);
  const auto base = terminal_shape_cost(states_at(agents), spec);

  const int perm[3] = {1, 2, 0};
  std::vector<Vec2> relabeled(3);
  for (int i = 0; i < 3; ++i) relabeled[i] = agents[perm[i]];
  const auto permuted = terminal_shape_cost(states_at(relabeled), spec);
  CHECK(permuted.value == doctest::Approx(base.value).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) {
    CHECK(permuted.position_gradient[i].x() ==
          doctest::Approx(base.position_gradient[perm[i]].x()));
    CHECK(permuted.position_gradient[i].y() ==
          doctest::Approx(base.position_gradient[perm[i]].y()));
  }
}

TEST_CASE("total cost: no terms means zero") {
  ScenarioSpec spec;
  spec.name = "empty";
  spec.initial = std::vector<Vec2>{{0.0, 0.0}};
  spec.horizon = 1.0;
  spec.steps = 4;
  ControlSchedule schedule(1, 4, spec.dt());
  const auto traj = rollout(spec.initial_states(), schedule);
  CHECK(total_cost(traj, schedule, spec).total == doctest::Approx(0.0));
}

TEST_CASE("total cost: single term equals the term, weighted sum holds") {
  ScenarioSpec spec;
  spec.name = "effort-only";
  spec.initial = std::vector<Vec2>{{0.0, 0.0}, {1.0, 0.0}};
  spec.horizon = 1.0;
  spec.steps = 5;
  spec.cost_terms = {ControlEffortTerm{1.0}};
  ControlSchedule schedule(2, 5, spec.dt());
  schedule.controls.at(0, 2) = Vec2(1.0, -2.0);
  schedule.controls.at(1, 4) = Vec2(0.5, 0.5);
  const auto traj = rollout(spec.initial_states(), schedule);
  const auto breakdown = total_cost(traj, schedule, spec);
  CHECK(breakdown.total == doctest::Approx(control_effort(schedule).first));

  // weighted-sum identity across a multi-term scenario
  ScenarioSpec multi = spec;
  multi.cost_terms = {ControlEffortTerm{0.3}, TerminalVelocityTerm{2.0},
                      CongestionTerm{0.7, 0.2},
                      MeanDestinationTerm{1.5, Vec2(1.0, 1.0)}};
  const auto bd = total_cost(traj, schedule, multi);
  double expected = 0.0;
  for (const CostTermValue& t : bd.terms) expected += t.weight * t.value;
  CHECK(bd.total == doctest::Approx(expected).epsilon(1e-12));
  CHECK(bd.terms.size() == 4);
}

}  // TEST_SUITE
