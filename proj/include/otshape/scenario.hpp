#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "otshape/costs.hpp"
#include "otshape/dynamics.hpp"
#include "otshape/shooting.hpp"

namespace otshape {

// ---------------------------------------------------------------------------
// Shape generators

struct GridParams {
  int rows = 1, cols = 1;
  double spacing = 1.0;
  Vec2 anchor = Vec2::Zero();
};

struct CircleParams {
  int count = 1;
  double radius = 1.0;
  Vec2 center = Vec2::Zero();
};

struct CircleInCircleParams {
  int n_outer = 1, n_inner = 0;
  double r_outer = 1.0, r_inner = 0.5;
  Vec2 center = Vec2::Zero();
};

struct FlyingVParams {
  int n_per_wing = 1;
  Vec2 apex = Vec2::Zero();
  double wing_angle_rad = 0.5;  // opening angle of each wing off the -x axis
  double spacing = 1.0;
};

/// Point list, either explicit or produced by a generator.
using PointSource = std::variant<std::vector<Vec2>, GridParams, CircleParams,
                                 CircleInCircleParams, FlyingVParams>;

/// rows x cols lattice centered on `anchor`, row-major from the lowest row.
std::vector<Vec2> generate_grid(int rows, int cols, double spacing,
                                const Vec2& anchor);

/// `count` equally spaced points on a circle, starting at angle 0,
/// counterclockwise.
std::vector<Vec2> generate_circle(int count, double radius,
                                  const Vec2& center);

/// Outer ring followed by inner ring, both starting at angle 0.
std::vector<Vec2> generate_circle_in_circle(int n_outer, int n_inner,
                                            double r_outer, double r_inner,
                                            const Vec2& center);

/// Apex plus two wings of n_per_wing points trailing behind it, mirror
/// symmetric about the horizontal axis through the apex. Wing points step
/// by `spacing` at `wing_angle_rad` off the -x direction. Order: apex, then
/// upper/lower alternating outward.
std::vector<Vec2> generate_flying_v(int n_per_wing, const Vec2& apex,
                                    double wing_angle_rad, double spacing);

std::vector<Vec2> resolve_points(const PointSource& source);

// ---------------------------------------------------------------------------
// Scenario configuration

/// Shape term as configured (reference still in generator form, weights
/// optional). resolve() produces the runtime ShapeCostSpec.
struct ShapeTermConfig {
  ShapeCostSpec::Mode mode = ShapeCostSpec::Mode::Terminal;
  double weight = 1.0;
  PointSource reference;
  std::optional<Eigen::VectorXd> b_weights;  // default uniform
  std::optional<Eigen::VectorXd> a_weights;  // over agents; default uniform
  bool centered = false;                     // always true in running mode
  bool normalize_weights = true;
  SolverTag solver = SolverTag::Exact;
  SinkhornOptions sinkhorn;

  ShapeCostSpec resolve() const;
};

using CostTermConfig =
    std::variant<ShapeTermConfig, ControlEffortTerm, TerminalVelocityTerm,
                 CongestionTerm, ObstacleTerm, MeanDestinationTerm>;

/// Full problem description: initial states (velocities zero), time grid,
/// enabled cost terms, and optimizer settings. Round-trips losslessly
/// through the canonical JSON form.
struct ScenarioSpec {
  std::string name;
  std::string notes;  // free text; empty means absent from the file
  PointSource initial;
  double horizon = 1.0;
  int steps = 50;
  std::vector<CostTermConfig> cost_terms;
  OptimizerOptions optimizer;
  std::uint64_t seed = 0;

  double dt() const { return horizon / steps; }
  int agent_count() const;
  std::vector<Vec2> initial_positions() const;
  std::vector<AgentState> initial_states() const;
  std::vector<CostTerm> resolved_terms() const;

  /// Throws ValidationError naming the violated invariant.
  void validate() const;
};

/// The six ready-made experiment setups, fully resolved.
std::vector<ScenarioSpec> catalog_scenarios();
std::vector<std::string> catalog_names();
/// Throws InvalidInputError (listing the catalog) for an unknown name.
ScenarioSpec catalog_scenario(const std::string& name);

// ---------------------------------------------------------------------------
// Scenario files (canonical JSON: sorted keys, 2-space indent)

ScenarioSpec parse_scenario_text(const std::string& text);
ScenarioSpec load_scenario(const std::string& path);
std::string scenario_to_text(const ScenarioSpec& spec);
void save_scenario(const ScenarioSpec& spec, const std::string& path);

}  // namespace otshape
