#include "otshape/artifacts.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace otshape {

namespace {

using nlohmann::json;

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InvalidInputError("cannot write file: " + path.string());
  }
  out << text;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream stream(s);
  std::string item;
  while (std::getline(stream, item, sep)) out.push_back(item);
  return out;
}

}  // namespace

std::string trajectory_to_csv(const Trajectory& trajectory) {
  std::string out = "agent_id,step,t,x1,x2,x3,x4\n";
  for (int i = 0; i < trajectory.agents; ++i) {
    for (int s = 0; s <= trajectory.steps; ++s) {
      const AgentState& state = trajectory.state(i, s);
      out += std::to_string(i) + "," + std::to_string(s) + "," +
             g17(s * trajectory.dt) + "," + g17(state.position.x()) + "," +
             g17(state.position.y()) + "," + g17(state.velocity.x()) + "," +
             g17(state.velocity.y()) + "\n";
    }
  }
  return out;
}

Trajectory trajectory_from_csv(const std::string& text) {
  std::stringstream stream(text);
  std::string line;
  if (!std::getline(stream, line) || line != "agent_id,step,t,x1,x2,x3,x4") {
    throw InvalidInputError("trajectory csv: bad or missing header row");
  }
  struct Row {
    int agent, step;
    AgentState state;
  };
  std::vector<Row> rows;
  int max_agent = -1, max_step = -1;
  double dt = 0.0;
  size_t line_no = 1;
  while (std::getline(stream, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 7) {
      throw InvalidInputError("trajectory csv: expected 7 fields on line " +
                              std::to_string(line_no));
    }
    Row row;
    try {
      row.agent = std::stoi(fields[0]);
      row.step = std::stoi(fields[1]);
      const double t = std::stod(fields[2]);
      row.state.position = Vec2(std::stod(fields[3]), std::stod(fields[4]));
      row.state.velocity = Vec2(std::stod(fields[5]), std::stod(fields[6]));
      if (row.step == 1) dt = t;
    } catch (const std::exception&) {
      throw InvalidInputError("trajectory csv: unparsable number on line " +
                              std::to_string(line_no));
    }
    max_agent = std::max(max_agent, row.agent);
    max_step = std::max(max_step, row.step);
    rows.push_back(row);
  }
  if (max_agent < 0 || max_step < 1) {
    throw InvalidInputError("trajectory csv: no data rows");
  }
  Trajectory traj;
  traj.agents = max_agent + 1;
  traj.steps = max_step;
  traj.dt = dt;
  traj.states.assign(static_cast<size_t>(traj.agents) * (traj.steps + 1), {});
  std::vector<char> seen(traj.states.size(), 0);
  for (const Row& row : rows) {
    if (row.agent < 0 || row.step < 0) {
      throw InvalidInputError("trajectory csv: negative agent_id or step");
    }
    traj.state(row.agent, row.step) = row.state;
    seen[static_cast<size_t>(row.step) * traj.agents + row.agent] = 1;
  }
  for (char s : seen) {
    if (!s) throw InvalidInputError("trajectory csv: missing (agent, step) rows");
  }
  return traj;
}

std::string cost_history_to_csv(
    const std::vector<std::pair<int, CostBreakdown>>& history) {
  if (history.empty()) return "iter,total\n";
  std::string out = "iter,total";
  for (const CostTermValue& t : history.front().second.terms) {
    out += "," + t.label;
  }
  out += "\n";
  for (const auto& [iter, breakdown] : history) {
    out += std::to_string(iter) + "," + g17(breakdown.total);
    for (const CostTermValue& t : breakdown.terms) out += "," + g17(t.value);
    out += "\n";
  }
  return out;
}

std::string summary_to_json_text(const RunArtifacts& artifacts) {
  json final_cost;
  final_cost["total"] = artifacts.final_cost.total;
  for (const CostTermValue& t : artifacts.final_cost.terms) {
    final_cost[t.label] = t.value;
  }
  json doc;
  doc["converged"] = artifacts.converged;
  doc["iterations"] = artifacts.iterations;
  doc["final_cost"] = final_cost;
  doc["wall_time_s"] = artifacts.wall_time_s;
  return doc.dump(2) + "\n";
}

ScenarioSpec apply_overrides(const ScenarioSpec& spec,
                             const std::vector<std::string>& overrides) {
  if (overrides.empty()) return spec;
  json doc = json::parse(scenario_to_text(spec));
  for (const std::string& entry : overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw InvalidInputError("override must look like key.path=value, got \"" +
                              entry + "\"");
    }
    const std::string path = entry.substr(0, eq);
    const std::string value_text = entry.substr(eq + 1);

    json* node = &doc;
    const auto segments = split(path, '.');
    for (size_t k = 0; k < segments.size(); ++k) {
      const std::string& seg = segments[k];
      json* next = nullptr;
      if (node->is_object() && node->contains(seg)) {
        next = &(*node)[seg];
      } else if (node->is_array()) {
        try {
          const size_t idx = std::stoul(seg);
          if (idx < node->size()) next = &(*node)[idx];
        } catch (const std::exception&) {
        }
      }
      if (!next) {
        throw InvalidInputError("invalid override key \"" + path +
                                "\" (no such field: " + seg + ")");
      }
      node = next;
    }
    json value;
    try {
      value = json::parse(value_text);
    } catch (const json::parse_error&) {
      value = value_text;  // bare strings (e.g. init=zeros) pass through
    }
    *node = value;
  }
  return parse_scenario_text(doc.dump());
}

RunArtifacts run_scenario(const ScenarioSpec& spec,
                          const std::filesystem::path& out_dir) {
  spec.validate();
  std::filesystem::create_directories(out_dir);

  const auto start = std::chrono::steady_clock::now();
  const OptimizationResult result = optimize(spec);
  const auto stop = std::chrono::steady_clock::now();

  RunArtifacts artifacts;
  artifacts.converged = result.converged;
  artifacts.iterations = result.iterations_run;
  artifacts.final_cost = result.cost_history.back().second;
  artifacts.wall_time_s =
      std::chrono::duration<double>(stop - start).count();

  artifacts.trajectory_csv = out_dir / (spec.name + "_trajectory.csv");
  artifacts.cost_history_csv = out_dir / (spec.name + "_costs.csv");
  artifacts.summary_json = out_dir / (spec.name + "_summary.json");
  artifacts.scenario_json = out_dir / (spec.name + "_scenario.json");

  write_file(artifacts.trajectory_csv, trajectory_to_csv(result.trajectory));
  write_file(artifacts.cost_history_csv, cost_history_to_csv(result.cost_history));
  write_file(artifacts.summary_json, summary_to_json_text(artifacts));
  save_scenario(spec, artifacts.scenario_json.string());
  return artifacts;
}

}  // namespace otshape
