#include "otshape/shooting.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "otshape/scenario.hpp"

namespace otshape {

namespace {

double objective_total(const ControlSchedule& schedule,
                       const ScenarioSpec& scenario,
                       const std::vector<AgentState>& initial,
                       CostEvalTrace* trace = nullptr) {
  const Trajectory traj = rollout(initial, schedule);
  return total_cost(traj, schedule, scenario, trace).total;
}

}  // namespace

GradientResult cost_and_gradient(const ControlSchedule& schedule,
                                 const ScenarioSpec& scenario,
                                 CostEvalTrace* trace) {
  const auto initial = scenario.initial_states();
  if (static_cast<int>(initial.size()) != schedule.agents()) {
    throw InvalidInputError("schedule agent count does not match scenario");
  }
  const Trajectory traj = rollout(initial, schedule);
  const ObjectiveEval eval =
      evaluate_objective(traj, schedule, scenario, true, trace);

  const int n = schedule.agents();
  const int S = schedule.steps();
  const double dt = schedule.dt;

  GradientResult out;
  out.breakdown = eval.breakdown;
  out.gradient = ControlGrid(n, S);

  // Backward sweep per agent. For x_{s+1} = A_d x_s + B_d u_s with
  // A_d = [I, dt I; 0, I] and B_d = [0; dt I]:
  //   dJ/du_s = dL_s/du_s + dt * lambda_vel(s+1)
  //   lambda(s) = dL_s/dx_s + A_d^T lambda(s+1)
  for (int i = 0; i < n; ++i) {
    const size_t terminal = static_cast<size_t>(S) * n + i;
    Vec2 lambda_pos = eval.dpos[terminal];
    Vec2 lambda_vel = eval.dvel[terminal];
    for (int s = S - 1; s >= 0; --s) {
      out.gradient.at(i, s) =
          eval.control_effort_weight * dt * schedule.controls.at(i, s) +
          dt * lambda_vel;
      const size_t idx = static_cast<size_t>(s) * n + i;
      const Vec2 next_pos = eval.dpos[idx] + lambda_pos;
      const Vec2 next_vel = eval.dvel[idx] + lambda_vel + dt * lambda_pos;
      lambda_pos = next_pos;
      lambda_vel = next_vel;
    }
  }
  return out;
}

ControlSchedule initial_schedule(const ScenarioSpec& scenario,
                                 OptimizerOptions::Init init) {
  ControlSchedule schedule(scenario.agent_count(), scenario.steps,
                           scenario.dt());
  if (init == OptimizerOptions::Init::Zeros) return schedule;

  // Constant-magnitude accelerate/brake profile that carries each agent from
  // rest to rest at the warm-start target: the mean destination when one is
  // configured, otherwise the first shape reference's mean.
  const auto terms = scenario.resolved_terms();
  const MeanDestinationTerm* dest = nullptr;
  const ShapeCostSpec* shape = nullptr;
  for (const CostTerm& term : terms) {
    if (!dest) dest = std::get_if<MeanDestinationTerm>(&term);
    if (!shape) shape = std::get_if<ShapeCostSpec>(&term);
  }
  Vec2 target = Vec2::Zero();
  if (dest) {
    target = dest->destination;
  } else if (shape) {
    target = shape->reference.mean();
  }
  const double T = scenario.horizon;
  const auto positions = scenario.initial_positions();
  for (int i = 0; i < schedule.agents(); ++i) {
    const Vec2 accel = 4.0 * (target - positions[i]) / (T * T);
    for (int s = 0; s < schedule.steps(); ++s) {
      const double t = (s + 0.5) * schedule.dt;
      schedule.controls.at(i, s) = t < 0.5 * T ? accel : -accel;
    }
  }
  return schedule;
}

OptimizationResult optimize(const ScenarioSpec& scenario,
                            const OptimizerOptions& options) {
  options.validate();
  scenario.validate();
  const auto initial = scenario.initial_states();

  ControlSchedule schedule = initial_schedule(scenario, options.init);
  GradientResult current = cost_and_gradient(schedule, scenario);

  OptimizationResult result;
  result.cost_history.emplace_back(0, current.breakdown);

  auto apply_step = [&](double step) {
    ControlSchedule next = schedule;
    for (size_t k = 0; k < next.controls.values.size(); ++k) {
      next.controls.values[k] -= step * current.gradient.values[k];
    }
    return next;
  };

  int iter = 0;
  bool converged = false;
  while (iter < options.max_iters) {
    ++iter;
    const double grad_norm = current.gradient.max_norm();
    if (options.alpha * grad_norm < options.tol) {
      converged = true;
      break;
    }

    double step = options.alpha;
    ControlSchedule next = apply_step(step);
    GradientResult next_result = cost_and_gradient(next, scenario);
    if (options.safeguard) {
      int halvings = 0;
      while (next_result.breakdown.total > current.breakdown.total) {
        if (++halvings > 20) break;
        step *= 0.5;
        next = apply_step(step);
        next_result = cost_and_gradient(next, scenario);
      }
      if (halvings > 20) {
        // No decreasing step exists at this scale; stop rather than accept
        // an increase (descent stalled at the floating-point noise floor or
        // at a transport-plan kink).
        break;
      }
    }

    schedule = std::move(next);
    current = std::move(next_result);
    if (!std::isfinite(current.breakdown.total) ||
        current.breakdown.total > 1e12) {
      throw DivergenceError(
          "cost exceeded 1e12; reduce the step size alpha");
    }
    if (iter % options.record_every == 0) {
      result.cost_history.emplace_back(iter, current.breakdown);
    }
  }

  if (result.cost_history.back().first != iter && iter > 0) {
    result.cost_history.emplace_back(iter, current.breakdown);
  }
  result.schedule = schedule;
  result.trajectory = rollout(initial, schedule);
  result.iterations_run = iter;
  result.converged = converged;
  result.final_grad_norm = current.gradient.max_norm();
  return result;
}

OptimizationResult optimize(const ScenarioSpec& scenario) {
  return optimize(scenario, scenario.optimizer);
}

GradientCheckReport check_gradient(const ScenarioSpec& scenario,
                                   const ControlSchedule& schedule,
                                   const GradientCheckOptions& options,
                                   const ControlGrid* analytic_override) {
  if (options.n_probes < 1 || !(options.fd_step > 0.0)) {
    throw InvalidInputError("gradient check needs n_probes >= 1, fd_step > 0");
  }
  const auto initial = scenario.initial_states();

  CostEvalTrace base_trace;
  const GradientResult base = cost_and_gradient(schedule, scenario, &base_trace);
  const ControlGrid& analytic =
      analytic_override ? *analytic_override : base.gradient;

  const int n = schedule.agents();
  const int S = schedule.steps();
  const long total_coords = 2L * n * S;
  const long n_probes = std::min<long>(options.n_probes, total_coords);

  // Distinct coordinates, uniformly without replacement.
  std::vector<long> coords(total_coords);
  for (long k = 0; k < total_coords; ++k) coords[k] = k;
  std::mt19937_64 rng(options.seed);
  for (long k = 0; k < n_probes; ++k) {
    std::uniform_int_distribution<long> pick(k, total_coords - 1);
    std::swap(coords[k], coords[pick(rng)]);
  }

  GradientCheckReport report;
  for (long k = 0; k < n_probes; ++k) {
    const long coord = coords[k];
    GradientCheckReport::Probe probe;
    probe.axis = static_cast<int>(coord % 2);
    probe.step = static_cast<int>((coord / 2) % S);
    probe.agent = static_cast<int>(coord / (2L * S));

    ControlSchedule perturbed = schedule;
    Vec2& u = perturbed.controls.at(probe.agent, probe.step);

    CostEvalTrace plus_trace, minus_trace;
    u[probe.axis] += options.fd_step;
    const double j_plus = objective_total(perturbed, scenario, initial, &plus_trace);
    u[probe.axis] -= 2.0 * options.fd_step;
    const double j_minus = objective_total(perturbed, scenario, initial, &minus_trace);

    if (plus_trace.plan_supports != base_trace.plan_supports ||
        minus_trace.plan_supports != base_trace.plan_supports) {
      probe.skipped_degenerate = true;
      ++report.probes_skipped;
      report.probes.push_back(probe);
      continue;
    }

    probe.fd = (j_plus - j_minus) / (2.0 * options.fd_step);
    probe.analytic = analytic.at(probe.agent, probe.step)[probe.axis];
    probe.rel_error = std::abs(probe.analytic - probe.fd) /
                      std::max({1.0, std::abs(probe.analytic), std::abs(probe.fd)});
    ++report.probes_checked;
    if (probe.rel_error >= report.max_rel_error) {
      report.max_rel_error = probe.rel_error;
      report.worst = probe;
    }
    report.probes.push_back(probe);
  }
  return report;
}

}  // namespace otshape
