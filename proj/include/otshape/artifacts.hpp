#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "otshape/scenario.hpp"
#include "otshape/shooting.hpp"

namespace otshape {

/// File outputs of one optimization run plus its summary facts. All paths
/// exist once run_scenario returns.
struct RunArtifacts {
  std::filesystem::path trajectory_csv;
  std::filesystem::path cost_history_csv;
  std::filesystem::path summary_json;
  std::filesystem::path scenario_json;  // fully resolved spec actually run
  bool converged = false;
  int iterations = 0;
  CostBreakdown final_cost;
  double wall_time_s = 0.0;
};

/// Columns: agent_id,step,t,x1,x2,x3,x4 (one header row). Values are
/// %.17g so identical trajectories serialize byte-identically.
std::string trajectory_to_csv(const Trajectory& trajectory);
Trajectory trajectory_from_csv(const std::string& text);

/// Columns: iter,total,<one column per enabled term> (raw term values).
std::string cost_history_to_csv(
    const std::vector<std::pair<int, CostBreakdown>>& history);

/// Keys: converged, iterations, final_cost (total plus per-term values),
/// wall_time_s.
std::string summary_to_json_text(const RunArtifacts& artifacts);

/// Applies dotted-path key=value overrides ("optimizer.max_iters=500",
/// "costs.1.weight=0") to the scenario's JSON document and re-validates.
/// Unknown paths raise InvalidInputError naming the key.
ScenarioSpec apply_overrides(const ScenarioSpec& spec,
                             const std::vector<std::string>& overrides);

/// Optimizes the scenario and writes all four artifact files under out_dir
/// (created if missing), named <scenario>_trajectory.csv and so on.
RunArtifacts run_scenario(const ScenarioSpec& spec,
                          const std::filesystem::path& out_dir);

}  // namespace otshape
