#include "otshape/dynamics.hpp"

#include <cmath>
#include <string>

namespace otshape {

double ControlGrid::max_norm() const {
  double out = 0.0;
  for (const Vec2& v : values) {
    out = std::max(out, std::max(std::abs(v.x()), std::abs(v.y())));
  }
  return out;
}

ControlSchedule::ControlSchedule(int n_agents, int n_steps, double step_size)
    : controls(n_agents, n_steps), dt(step_size) {
  if (n_agents < 1 || n_steps < 1 || !(step_size > 0.0)) {
    throw InvalidInputError("schedule needs agents >= 1, steps >= 1, dt > 0");
  }
}

Eigen::Vector4d double_integrator_deriv(const AgentState& state,
                                        const ControlInput& control) {
  Eigen::Vector4d d;
  d << state.velocity.x(), state.velocity.y(), control.x(), control.y();
  return d;
}

AgentState euler_step(const AgentState& state, const ControlInput& control,
                      double dt) {
  AgentState next;
  next.position = state.position + dt * state.velocity;
  next.velocity = state.velocity + dt * control;
  return next;
}

Trajectory rollout(std::span<const AgentState> initial,
                   const ControlSchedule& schedule) {
  const int n = schedule.agents();
  const int s = schedule.steps();
  if (static_cast<int>(initial.size()) != n) {
    throw InvalidInputError("rollout: " + std::to_string(initial.size()) +
                            " initial states for " + std::to_string(n) +
                            "-agent schedule");
  }
  Trajectory traj;
  traj.agents = n;
  traj.steps = s;
  traj.dt = schedule.dt;
  traj.states.resize(static_cast<size_t>(n) * (s + 1));
  for (int i = 0; i < n; ++i) traj.state(i, 0) = initial[i];
  for (int step = 0; step < s; ++step) {
    for (int i = 0; i < n; ++i) {
      traj.state(i, step + 1) =
          euler_step(traj.state(i, step), schedule.controls.at(i, step),
                     schedule.dt);
    }
  }
  return traj;
}

}  // namespace otshape
