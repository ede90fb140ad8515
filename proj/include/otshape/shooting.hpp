#pragma once

#include <cstdint>
#include <vector>

#include "otshape/costs.hpp"
#include "otshape/dynamics.hpp"

namespace otshape {

struct ScenarioSpec;  // scenario.hpp

struct OptimizerOptions {
  double alpha = 1.0;         // gradient descent step size
  int max_iters = 10000;
  double tol = 1e-6;          // max-norm of the applied control update
  enum class Init { Zeros, StraightLine } init = Init::Zeros;
  int record_every = 1;       // iteration stride for cost-history snapshots
  bool safeguard = true;      // backtracking halving when a step increases J

  void validate() const;
};

struct GradientResult {
  CostBreakdown breakdown;
  ControlGrid gradient;  // dJ/du for every (agent, step)
};

/// Objective value and its gradient with respect to every control, via one
/// forward rollout and a backward adjoint sweep through the Euler recursion.
/// Transport plans are re-solved at the current trajectory and frozen during
/// differentiation. For the double integrator the transition Jacobians are
/// the constants I + dt*A and dt*B.
GradientResult cost_and_gradient(const ControlSchedule& schedule,
                                 const ScenarioSpec& scenario,
                                 CostEvalTrace* trace = nullptr);

struct OptimizationResult {
  ControlSchedule schedule;
  Trajectory trajectory;
  std::vector<std::pair<int, CostBreakdown>> cost_history;
  int iterations_run = 0;
  bool converged = false;
  double final_grad_norm = 0.0;
};

/// Plain gradient descent u <- u - alpha * dJ/du until the applied update's
/// max-norm drops below tol or max_iters is reached. With the safeguard on,
/// a step that increases the total is halved (up to 20 times) before being
/// applied, so recorded totals are non-increasing; if no decreasing step
/// exists the run stops unconverged rather than accept an increase.
/// Throws DivergenceError when the total exceeds 1e12.
OptimizationResult optimize(const ScenarioSpec& scenario,
                            const OptimizerOptions& options);

/// optimize() with the scenario's own optimizer options.
OptimizationResult optimize(const ScenarioSpec& scenario);

/// Builds the initial schedule the optimizer starts from (zeros, or the
/// constant-acceleration warm start toward the reference mean).
ControlSchedule initial_schedule(const ScenarioSpec& scenario,
                                 OptimizerOptions::Init init);

struct GradientCheckOptions {
  int n_probes = 20;
  double fd_step = 1e-6;
  std::uint64_t seed = 0;
};

struct GradientCheckReport {
  struct Probe {
    int agent = 0, step = 0, axis = 0;
    double analytic = 0.0, fd = 0.0, rel_error = 0.0;
    bool skipped_degenerate = false;
  };
  std::vector<Probe> probes;
  int probes_checked = 0;
  int probes_skipped = 0;
  double max_rel_error = 0.0;  // over non-skipped probes
  Probe worst;                 // probe attaining max_rel_error
};

/// Central finite-difference audit of cost_and_gradient on randomly chosen
/// control coordinates. Probes where the +/- perturbation changes any
/// transport plan's support are reported as degenerate and skipped, not
/// failed. Relative error uses max(1, |analytic|, |fd|) as denominator.
/// `analytic_override`, when given, is audited in place of the computed
/// gradient (lets a harness test flag an injected corruption).
GradientCheckReport check_gradient(const ScenarioSpec& scenario,
                                   const ControlSchedule& schedule,
                                   const GradientCheckOptions& options,
                                   const ControlGrid* analytic_override = nullptr);

}  // namespace otshape
