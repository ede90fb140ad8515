#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "otshape/errors.hpp"
#include "otshape/measure.hpp"

namespace otshape {

/// Planar acceleration command (m/s^2).
using ControlInput = Vec2;

/// 2D double-integrator state: position (m) and velocity (m/s).
struct AgentState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();

  bool finite() const { return position.allFinite() && velocity.allFinite(); }
};

/// Dense (agent, step) grid of 2D vectors. Used both for control schedules
/// and for gradients with respect to them.
struct ControlGrid {
  int agents = 0;
  int steps = 0;
  std::vector<Vec2> values;  // agent-major: values[agent * steps + step]

  ControlGrid() = default;
  ControlGrid(int n_agents, int n_steps)
      : agents(n_agents), steps(n_steps),
        values(static_cast<size_t>(n_agents) * n_steps, Vec2::Zero()) {}

  Vec2& at(int agent, int step) {
    return values[static_cast<size_t>(agent) * steps + step];
  }
  const Vec2& at(int agent, int step) const {
    return values[static_cast<size_t>(agent) * steps + step];
  }

  double max_norm() const;  // max over entries of |component|
};

/// Per-agent, per-timestep controls over a uniform time grid.
struct ControlSchedule {
  ControlGrid controls;
  double dt = 0.0;

  ControlSchedule() = default;
  ControlSchedule(int n_agents, int n_steps, double step_size);

  int agents() const { return controls.agents; }
  int steps() const { return controls.steps; }
  double horizon() const { return controls.steps * dt; }
};

/// States produced by rolling a schedule forward: steps+1 samples per agent,
/// stored step-major so all agents at one time are contiguous.
struct Trajectory {
  int agents = 0;
  int steps = 0;
  double dt = 0.0;
  std::vector<AgentState> states;  // states[step * agents + agent]

  const AgentState& state(int agent, int step) const {
    return states[static_cast<size_t>(step) * agents + agent];
  }
  AgentState& state(int agent, int step) {
    return states[static_cast<size_t>(step) * agents + agent];
  }
  std::span<const AgentState> states_at(int step) const {
    return {states.data() + static_cast<size_t>(step) * agents,
            static_cast<size_t>(agents)};
  }
};

/// Double-integrator vector field: d/dt (pos, vel) = (vel, control).
Eigen::Vector4d double_integrator_deriv(const AgentState& state,
                                        const ControlInput& control);

/// One forward-Euler step: state + dt * f(state, control).
AgentState euler_step(const AgentState& state, const ControlInput& control,
                      double dt);

/// Roll every agent forward through the full schedule. Deterministic;
/// agents are independent.
Trajectory rollout(std::span<const AgentState> initial,
                   const ControlSchedule& schedule);

}  // namespace otshape
