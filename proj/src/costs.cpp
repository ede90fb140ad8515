#include "otshape/costs.hpp"

#include <cmath>

#include "otshape/scenario.hpp"

namespace otshape {

namespace {

std::vector<Vec2> positions_of(std::span<const AgentState> states) {
  std::vector<Vec2> out;
  out.reserve(states.size());
  for (const AgentState& s : states) out.push_back(s.position);
  return out;
}

Vec2 mean_of(const std::vector<Vec2>& pts) {
  Vec2 m = Vec2::Zero();
  for (const Vec2& p : pts) m += p;
  return m / static_cast<double>(pts.size());
}

TransportPlan solve_for_spec(const Eigen::VectorXd& a,
                             const Eigen::VectorXd& b, const CostMatrix& cost,
                             const ShapeCostSpec& spec) {
  if (spec.solver == SolverTag::Sinkhorn) {
    return solve_sinkhorn(a, b, cost, spec.sinkhorn);
  }
  return solve_exact(a, b, cost);
}

// Shared core of the terminal and running shape costs. Centers both point
// sets when asked, solves for the plan, and differentiates sum pi_ij c_ij
// with the plan frozen. When centered, each agent's gradient picks up the
// -average correction from differentiating the mean through all agents.
ShapeCostResult shape_cost_impl(std::span<const AgentState> states,
                                const ShapeCostSpec& spec, bool center) {
  const int n = static_cast<int>(states.size());
  spec.validate(n);

  std::vector<Vec2> agent_pts = positions_of(states);
  std::vector<Vec2> ref_pts = spec.reference.points;
  if (center) {
    const Vec2 am = mean_of(agent_pts);
    for (Vec2& p : agent_pts) p -= am;
    const Vec2 rm = mean_of(ref_pts);
    for (Vec2& p : ref_pts) p -= rm;
  }

  const CostMatrix cost = squared_distance_matrix(agent_pts, ref_pts);
  const Eigen::VectorXd a = spec.resolved_agent_weights(n);
  const Eigen::VectorXd& b = spec.reference.weights;

  ShapeCostResult out;
  out.plan = solve_for_spec(a, b, cost, spec);
  out.value = out.plan.value;

  const int m = spec.reference.size();
  out.position_gradient.assign(n, Vec2::Zero());
  for (int i = 0; i < n; ++i) {
    Vec2 g = Vec2::Zero();
    for (int j = 0; j < m; ++j) {
      const double pi = out.plan.coupling(i, j);
      if (pi == 0.0) continue;
      g += pi * 2.0 * (agent_pts[i] - ref_pts[j]);
    }
    out.position_gradient[i] = g;
  }
  if (center) {
    Vec2 avg = Vec2::Zero();
    for (const Vec2& g : out.position_gradient) avg += g;
    avg /= static_cast<double>(n);
    for (Vec2& g : out.position_gradient) g -= avg;
  }
  return out;
}

void record_support(CostEvalTrace* trace, const TransportPlan& plan) {
  if (!trace) return;
  std::vector<std::pair<int, int>> support;
  for (int i = 0; i < plan.rows(); ++i) {
    for (int j = 0; j < plan.cols(); ++j) {
      if (plan.coupling(i, j) > trace->support_threshold) {
        support.emplace_back(i, j);
      }
    }
  }
  trace->plan_supports.push_back(std::move(support));
}

}  // namespace

void ShapeCostSpec::validate(int n_agents) const {
  reference.validate();
  if (weight < 0.0 || !std::isfinite(weight)) {
    throw InvalidInputError("shape cost weight must be finite and >= 0");
  }
  if (mode == Mode::Running && !centered) {
    throw InvalidInputError("running shape cost requires centered = true");
  }
  if (agent_weights.size() != 0 &&
      agent_weights.size() != static_cast<Eigen::Index>(n_agents)) {
    throw InvalidInputError("agent weight count does not match agent count");
  }
}

Eigen::VectorXd ShapeCostSpec::resolved_agent_weights(int n_agents) const {
  if (agent_weights.size() == 0) {
    return Eigen::VectorXd::Ones(n_agents);
  }
  return agent_weights;
}

void ObstacleSpec::validate() const {
  if (!(radius > 0.0) || strength < 0.0 || !(sharpness > 0.0) ||
      !center.allFinite()) {
    throw InvalidInputError(
        "obstacle needs radius > 0, strength >= 0, sharpness > 0");
  }
}

ShapeCostResult terminal_shape_cost(std::span<const AgentState> final_states,
                                    const ShapeCostSpec& spec) {
  if (spec.mode != ShapeCostSpec::Mode::Terminal) {
    throw InvalidInputError("terminal_shape_cost needs a terminal-mode spec");
  }
  return shape_cost_impl(final_states, spec, spec.centered);
}

ShapeCostResult running_shape_cost(std::span<const AgentState> states,
                                   const ShapeCostSpec& spec) {
  if (spec.mode != ShapeCostSpec::Mode::Running) {
    throw InvalidInputError("running_shape_cost needs a running-mode spec");
  }
  return shape_cost_impl(states, spec, true);
}

std::pair<double, ControlGrid> control_effort(const ControlSchedule& schedule) {
  double value = 0.0;
  ControlGrid grad(schedule.agents(), schedule.steps());
  for (int i = 0; i < schedule.agents(); ++i) {
    for (int s = 0; s < schedule.steps(); ++s) {
      const Vec2& u = schedule.controls.at(i, s);
      value += 0.5 * u.squaredNorm();
      grad.at(i, s) = schedule.dt * u;
    }
  }
  return {schedule.dt * value, std::move(grad)};
}

std::pair<double, std::vector<Vec2>> terminal_velocity_cost(
    std::span<const AgentState> final_states) {
  const int n = static_cast<int>(final_states.size());
  double value = 0.0;
  std::vector<Vec2> grad(n);
  for (int i = 0; i < n; ++i) {
    value += 0.5 * final_states[i].velocity.squaredNorm();
    grad[i] = final_states[i].velocity / n;
  }
  return {value / n, std::move(grad)};
}

std::pair<double, std::vector<Vec2>> congestion_penalty(
    std::span<const AgentState> states, double sigma) {
  if (!(sigma > 0.0)) {
    throw InvalidInputError("congestion sigma must be positive");
  }
  const int n = static_cast<int>(states.size());
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
  double value = static_cast<double>(n);  // diagonal terms exp(0)
  std::vector<Vec2> grad(n, Vec2::Zero());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Vec2 d = states[i].position - states[j].position;
      const double t = std::exp(-d.squaredNorm() * inv_two_sigma2);
      value += 2.0 * t;  // ordered pairs (i,j) and (j,i)
      const Vec2 pull = (2.0 * t * 2.0 * inv_two_sigma2) * d;
      grad[i] -= pull;
      grad[j] += pull;
    }
  }
  return {value, std::move(grad)};
}

std::pair<double, std::vector<Vec2>> obstacle_penalty(
    std::span<const AgentState> states,
    std::span<const ObstacleSpec> obstacles) {
  const int n = static_cast<int>(states.size());
  double value = 0.0;
  std::vector<Vec2> grad(n, Vec2::Zero());
  for (const ObstacleSpec& obs : obstacles) {
    obs.validate();
    const double r2 = obs.radius * obs.radius;
    for (int i = 0; i < n; ++i) {
      const Vec2 d = states[i].position - obs.center;
      const double excess = d.squaredNorm() - r2;
      if (excess <= 0.0) {
        value += obs.strength;  // flat inside the disk
      } else {
        const double e = obs.strength * std::exp(-obs.sharpness * excess);
        value += e;
        grad[i] += -obs.sharpness * e * 2.0 * d;
      }
    }
  }
  return {value, std::move(grad)};
}

std::pair<double, std::vector<Vec2>> mean_destination_cost(
    std::span<const AgentState> final_states, const Vec2& destination) {
  const int n = static_cast<int>(final_states.size());
  Vec2 mean = Vec2::Zero();
  for (const AgentState& s : final_states) mean += s.position;
  mean /= static_cast<double>(n);
  const Vec2 err = mean - destination;
  std::vector<Vec2> grad(n, err / static_cast<double>(n));
  return {0.5 * err.squaredNorm(), std::move(grad)};
}

double CostBreakdown::weighted_sum() const {
  double out = 0.0;
  for (const CostTermValue& t : terms) out += t.weight * t.value;
  return out;
}

const CostTermValue* CostBreakdown::find(const std::string& label) const {
  for (const CostTermValue& t : terms) {
    if (t.label == label) return &t;
  }
  return nullptr;
}

namespace {

// Unique label for a term within one breakdown (two obstacle terms become
// "obstacle" and "obstacle_2").
std::string unique_label(const CostBreakdown& bd, const std::string& base) {
  if (!bd.find(base)) return base;
  int k = 2;
  while (bd.find(base + "_" + std::to_string(k))) ++k;
  return base + "_" + std::to_string(k);
}

struct GradSink {
  ObjectiveEval* eval = nullptr;
  int agents = 0;

  void add_positions(int step, const std::vector<Vec2>& g, double scale) {
    if (!eval) return;
    for (int i = 0; i < agents; ++i) {
      eval->dpos[static_cast<size_t>(step) * agents + i] += scale * g[i];
    }
  }
  void add_velocities(int step, const std::vector<Vec2>& g, double scale) {
    if (!eval) return;
    for (int i = 0; i < agents; ++i) {
      eval->dvel[static_cast<size_t>(step) * agents + i] += scale * g[i];
    }
  }
};

}  // namespace

ObjectiveEval evaluate_objective(const Trajectory& trajectory,
                                 const ControlSchedule& schedule,
                                 const ScenarioSpec& scenario,
                                 bool want_gradients, CostEvalTrace* trace) {
  const int n = trajectory.agents;
  const int S = trajectory.steps;
  const double dt = trajectory.dt;
  if (schedule.agents() != n || schedule.steps() != S) {
    throw InvalidInputError("trajectory and schedule dimensions disagree");
  }

  ObjectiveEval eval;
  if (want_gradients) {
    eval.dpos.assign(static_cast<size_t>(n) * (S + 1), Vec2::Zero());
    eval.dvel.assign(static_cast<size_t>(n) * (S + 1), Vec2::Zero());
  }
  GradSink sink{want_gradients ? &eval : nullptr, n};

  for (const CostTerm& term : scenario.resolved_terms()) {
    CostTermValue entry;
    if (const auto* shape = std::get_if<ShapeCostSpec>(&term)) {
      entry.weight = shape->weight;
      if (shape->mode == ShapeCostSpec::Mode::Running) {
        entry.label = unique_label(eval.breakdown, "shape_running");
        double sum = 0.0;
        for (int s = 0; s < S; ++s) {
          ShapeCostResult r = running_shape_cost(trajectory.states_at(s), *shape);
          record_support(trace, r.plan);
          sum += r.value;
          sink.add_positions(s, r.position_gradient, shape->weight * dt);
        }
        entry.value = dt * sum;
      } else {
        entry.label = unique_label(eval.breakdown, "shape_terminal");
        ShapeCostResult r = terminal_shape_cost(trajectory.states_at(S), *shape);
        record_support(trace, r.plan);
        entry.value = r.value;
        sink.add_positions(S, r.position_gradient, shape->weight);
      }
    } else if (const auto* effort = std::get_if<ControlEffortTerm>(&term)) {
      entry.label = unique_label(eval.breakdown, "control_effort");
      double sum = 0.0;
      for (const Vec2& u : schedule.controls.values) sum += 0.5 * u.squaredNorm();
      entry.value = dt * sum;
      entry.weight = effort->weight;
      // direct dJ/du part; applied during the adjoint sweep
      eval.control_effort_weight += effort->weight;
    } else if (const auto* tv = std::get_if<TerminalVelocityTerm>(&term)) {
      entry.label = unique_label(eval.breakdown, "terminal_velocity");
      auto [value, grad] = terminal_velocity_cost(trajectory.states_at(S));
      entry.value = value;
      entry.weight = tv->weight;
      sink.add_velocities(S, grad, tv->weight);
    } else if (const auto* cong = std::get_if<CongestionTerm>(&term)) {
      entry.label = unique_label(eval.breakdown, "congestion");
      entry.weight = cong->weight;
      double sum = 0.0;
      for (int s = 0; s < S; ++s) {
        auto [value, grad] = congestion_penalty(trajectory.states_at(s), cong->sigma);
        sum += value;
        sink.add_positions(s, grad, cong->weight * dt);
      }
      entry.value = dt * sum;
    } else if (const auto* obst = std::get_if<ObstacleTerm>(&term)) {
      entry.label = unique_label(eval.breakdown, "obstacle");
      entry.weight = obst->weight;
      double sum = 0.0;
      for (int s = 0; s < S; ++s) {
        auto [value, grad] = obstacle_penalty(trajectory.states_at(s), obst->obstacles);
        sum += value;
        sink.add_positions(s, grad, obst->weight * dt);
      }
      entry.value = dt * sum;
    } else if (const auto* dest = std::get_if<MeanDestinationTerm>(&term)) {
      entry.label = unique_label(eval.breakdown, "mean_destination");
      entry.weight = dest->weight;
      auto [value, grad] = mean_destination_cost(trajectory.states_at(S), dest->destination);
      entry.value = value;
      sink.add_positions(S, grad, dest->weight);
    }
    eval.breakdown.terms.push_back(std::move(entry));
  }

  eval.breakdown.total = eval.breakdown.weighted_sum();
  return eval;
}

CostBreakdown total_cost(const Trajectory& trajectory,
                         const ControlSchedule& schedule,
                         const ScenarioSpec& scenario, CostEvalTrace* trace) {
  return evaluate_objective(trajectory, schedule, scenario, false, trace)
      .breakdown;
}

}  // namespace otshape
