#pragma once

#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "otshape/dynamics.hpp"
#include "otshape/measure.hpp"
#include "otshape/transport.hpp"

namespace otshape {

struct ScenarioSpec;  // scenario.hpp

/// Configuration of one shape (EMD) cost term. In running mode the points
/// are mean-centered before the transport solve, which makes the term
/// translation invariant; terminal mode may optionally center as well.
struct ShapeCostSpec {
  enum class Mode { Terminal, Running };

  DiscreteMeasure reference;     // the target points with weights b
  Eigen::VectorXd agent_weights; // weights a over agents; empty = uniform
  Mode mode = Mode::Terminal;
  bool centered = false;         // forced true in running mode
  double weight = 1.0;
  SolverTag solver = SolverTag::Exact;
  SinkhornOptions sinkhorn;      // used when solver == Sinkhorn

  void validate(int n_agents) const;
  Eigen::VectorXd resolved_agent_weights(int n_agents) const;
};

/// Smooth repulsive disk. Penalty per agent:
///   strength * exp(-sharpness * max(0, |p - center|^2 - radius^2))
/// which is `strength` anywhere inside the disk and decays smoothly outside.
struct ObstacleSpec {
  Vec2 center = Vec2::Zero();
  double radius = 1.0;
  double strength = 1.0;
  double sharpness = 1.0;

  void validate() const;
};

struct ControlEffortTerm {
  double weight = 1.0;
};
struct TerminalVelocityTerm {
  double weight = 1.0;
};
struct CongestionTerm {
  double weight = 1.0;
  double sigma = 0.15;
};
struct ObstacleTerm {
  double weight = 1.0;
  std::vector<ObstacleSpec> obstacles;
};
/// Loosened destination constraint: (1/2) |mean position(T) - destination|^2.
struct MeanDestinationTerm {
  double weight = 1.0;
  Vec2 destination = Vec2::Zero();
};

using CostTerm = std::variant<ShapeCostSpec, ControlEffortTerm,
                              TerminalVelocityTerm, CongestionTerm,
                              ObstacleTerm, MeanDestinationTerm>;

/// Value of one cost term plus its gradient with respect to the inputs it
/// depends on (positions for shape terms, controls for effort, ...).
struct ShapeCostResult {
  double value = 0.0;
  std::vector<Vec2> position_gradient;  // one entry per agent
  TransportPlan plan;
};

/// EMD between the agents' final positions and the reference measure, with
/// the transport plan frozen at its optimum for the gradient (envelope
/// argument): d/dx_i = sum_j plan_ij * 2 (x_i - z_j).
ShapeCostResult terminal_shape_cost(std::span<const AgentState> final_states,
                                    const ShapeCostSpec& spec);

/// Mean-centered EMD at one time slice. Both point sets are centered on
/// their unweighted means before the solve; the gradient carries the
/// mean-subtraction correction (each agent's centered gradient minus the
/// average of all centered gradients).
ShapeCostResult running_shape_cost(std::span<const AgentState> states,
                                   const ShapeCostSpec& spec);

/// dt * sum over steps and agents of |u|^2 / 2. Gradient per control is
/// dt * u.
std::pair<double, ControlGrid> control_effort(const ControlSchedule& schedule);

/// Mean over agents of half the squared terminal speed.
std::pair<double, std::vector<Vec2>> terminal_velocity_cost(
    std::span<const AgentState> final_states);

/// Gaussian-kernel congestion over all ordered agent pairs, diagonal
/// included (a constant N with zero gradient).
std::pair<double, std::vector<Vec2>> congestion_penalty(
    std::span<const AgentState> states, double sigma);

std::pair<double, std::vector<Vec2>> obstacle_penalty(
    std::span<const AgentState> states,
    std::span<const ObstacleSpec> obstacles);

std::pair<double, std::vector<Vec2>> mean_destination_cost(
    std::span<const AgentState> final_states, const Vec2& destination);

/// Raw (unweighted) value of one term plus its scenario weight. The weighted
/// contributions sum to `total`.
struct CostTermValue {
  std::string label;
  double value = 0.0;
  double weight = 1.0;
};

struct CostBreakdown {
  double total = 0.0;
  std::vector<CostTermValue> terms;

  double weighted_sum() const;
  const CostTermValue* find(const std::string& label) const;
};

/// Support sets of every transport plan solved during one objective
/// evaluation, in a fixed order. The gradient-check harness compares these
/// across perturbed evaluations to detect plan degeneracy.
struct CostEvalTrace {
  double support_threshold = 1e-10;
  std::vector<std::vector<std::pair<int, int>>> plan_supports;
};

/// Full objective evaluation: per-term values, and (optionally) the cost
/// gradient with respect to every trajectory state. Running terms are
/// evaluated at steps 0..S-1 and scaled by dt; terminal terms at step S.
struct ObjectiveEval {
  CostBreakdown breakdown;
  // step-major like Trajectory::states; filled only when gradients are
  // requested. Already weighted and dt-scaled.
  std::vector<Vec2> dpos;
  std::vector<Vec2> dvel;
  // combined weight multiplying the direct dt*u control-effort gradient
  double control_effort_weight = 0.0;
};

ObjectiveEval evaluate_objective(const Trajectory& trajectory,
                                 const ControlSchedule& schedule,
                                 const ScenarioSpec& scenario,
                                 bool want_gradients,
                                 CostEvalTrace* trace = nullptr);

/// Weighted sum of every enabled cost term for a rolled-out trajectory.
CostBreakdown total_cost(const Trajectory& trajectory,
                         const ControlSchedule& schedule,
                         const ScenarioSpec& scenario,
                         CostEvalTrace* trace = nullptr);

}  // namespace otshape
