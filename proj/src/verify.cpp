#include "otshape/verify.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "otshape/scenario.hpp"
#include "otshape/shooting.hpp"

namespace otshape::verify {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

double brute_force_assignment_value(const CostMatrix& cost) {
  const int n = cost.rows();
  if (n != cost.cols() || n > 8) {
    throw InvalidInputError("assignment oracle handles square matrices up to 8x8");
  }
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = kInf;
  do {
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += cost.entries(i, perm[i]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

namespace {

// Flows forced by the marginals on one candidate basis (a spanning tree of
// the bipartite row/column graph), via leaf elimination. Returns false if
// the subset is not a tree or yields an infeasible (negative) flow.
bool tree_flow_value(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                     const Eigen::MatrixXd& cost,
                     const std::vector<int>& cells, double* value) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  if (n < 1 || m < 1) return false;
  const int nodes = n + m;
  std::vector<int> degree(nodes, 0);
  for (int cell : cells) {
    ++degree[cell / m];
    ++degree[n + cell % m];
  }
  for (int node = 0; node < nodes; ++node) {
    if (degree[node] == 0) return false;  // disconnected: not spanning
  }

  std::vector<double> rem(nodes);
  for (int i = 0; i < n; ++i) rem[i] = a[i];
  for (int j = 0; j < m; ++j) rem[n + j] = b[j];

  std::vector<char> alive(cells.size(), 1);
  double total = 0.0;
  int remaining = static_cast<int>(cells.size());
  while (remaining > 0) {
    int leaf_pos = -1;
    for (size_t k = 0; k < cells.size(); ++k) {
      if (!alive[k]) continue;
      const int i = cells[k] / m, j = cells[k] % m;
      if (degree[i] == 1 || degree[n + j] == 1) {
        leaf_pos = static_cast<int>(k);
        break;
      }
    }
    if (leaf_pos < 0) return false;  // cycle: not a tree
    const int i = cells[leaf_pos] / m, j = cells[leaf_pos] % m;
    const double flow = degree[i] == 1 ? rem[i] : rem[n + j];
    if (flow < -1e-12) return false;
    total += std::max(0.0, flow) * cost(i, j);
    rem[i] -= flow;
    rem[n + j] -= flow;
    --degree[i];
    --degree[n + j];
    alive[leaf_pos] = 0;
    --remaining;
  }
  *value = total;
  return true;
}

}  // namespace

std::vector<double> transport_vertex_values(const Eigen::VectorXd& a,
                                            const Eigen::VectorXd& b,
                                            const CostMatrix& cost) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  if (n < 1 || m < 1 || n > 4 || m > 4) {
    throw InvalidInputError("vertex enumeration oracle handles 1 <= n, m <= 4");
  }
  const Eigen::VectorXd an = a / a.sum();
  const Eigen::VectorXd bn = b / b.sum();
  const int cells_total = n * m;
  const int basis_size = n + m - 1;

  std::vector<double> values;
  std::vector<int> cells(basis_size);
  // every (n+m-1)-subset of cells
  std::vector<int> idx(basis_size);
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    for (int k = 0; k < basis_size; ++k) cells[k] = idx[k];
    double value = 0.0;
    if (tree_flow_value(an, bn, cost.entries, cells, &value)) {
      values.push_back(value);
    }
    // next combination
    int k = basis_size - 1;
    while (k >= 0 && idx[k] == cells_total - basis_size + k) --k;
    if (k < 0) break;
    ++idx[k];
    for (int t = k + 1; t < basis_size; ++t) idx[t] = idx[t - 1] + 1;
  }
  return values;
}

double brute_force_transport_value(const Eigen::VectorXd& a,
                                   const Eigen::VectorXd& b,
                                   const CostMatrix& cost) {
  double best = kInf;
  for (double v : transport_vertex_values(a, b, cost)) best = std::min(best, v);
  return best;
}

ControlGrid solve_lqr_riccati(const LqrProblem& problem) {
  const double dt = problem.dt;
  const int S = problem.steps;
  Eigen::Matrix4d A = Eigen::Matrix4d::Identity();
  A(0, 2) = dt;
  A(1, 3) = dt;
  Eigen::Matrix<double, 4, 2> B = Eigen::Matrix<double, 4, 2>::Zero();
  B(2, 0) = dt;
  B(3, 1) = dt;

  Eigen::Matrix4d Qf = Eigen::Matrix4d::Zero();
  Qf(0, 0) = Qf(1, 1) = problem.terminal_weight;
  const Eigen::Matrix2d R =
      problem.control_weight * dt * Eigen::Matrix2d::Identity();

  std::vector<Eigen::Matrix<double, 2, 4>> gains(S);
  Eigen::Matrix4d P = Qf;
  for (int s = S - 1; s >= 0; --s) {
    const Eigen::Matrix2d H = R + B.transpose() * P * B;
    const Eigen::Matrix<double, 2, 4> K = H.inverse() * B.transpose() * P * A;
    gains[s] = K;
    P = A.transpose() * P * (A - B * K);
    P = 0.5 * (P + P.transpose());
  }

  // roll the error state e = x - (target, 0); the target is an equilibrium
  Eigen::Vector4d e = problem.initial;
  e[0] -= problem.target.x();
  e[1] -= problem.target.y();
  ControlGrid controls(1, S);
  for (int s = 0; s < S; ++s) {
    const Vec2 u = -gains[s] * e;
    controls.at(0, s) = u;
    e = A * e + B * u;
  }
  return controls;
}

bool SuiteResult::all_pass() const {
  for (const Check& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Suites

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

CostMatrix random_cost(std::mt19937_64& rng, int n, int m) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  CostMatrix c;
  c.entries.resize(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) c.entries(i, j) = unit(rng);
  }
  return c;
}

Eigen::VectorXd random_rational_weights(std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<int> small(1, 5);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w[i] = static_cast<double>(small(rng));
  return w;
}

double marginal_error(const TransportPlan& plan, const Eigen::VectorXd& a,
                      const Eigen::VectorXd& b) {
  const Eigen::VectorXd an = a / a.sum();
  const Eigen::VectorXd bn = b / b.sum();
  return std::max(
      (plan.coupling.rowwise().sum() - an).cwiseAbs().maxCoeff(),
      (plan.coupling.colwise().sum().transpose() - bn).cwiseAbs().maxCoeff());
}

ScenarioSpec single_term_scenario(const std::string& name,
                                  const CostTermConfig& term, int agents,
                                  int steps) {
  ScenarioSpec spec;
  spec.name = name;
  // two staggered rows so no configuration is symmetric enough to tie
  GridParams grid;
  grid.rows = 2;
  grid.cols = (agents + 1) / 2;
  grid.spacing = 0.4;
  grid.anchor = Vec2(0.1, -0.05);
  spec.initial = grid;
  spec.horizon = 1.0;
  spec.steps = steps;
  spec.cost_terms = {term};
  spec.optimizer.alpha = 0.1;
  return spec;
}

ControlSchedule random_schedule(const ScenarioSpec& spec, std::mt19937_64& rng,
                                double scale) {
  ControlSchedule schedule(spec.agent_count(), spec.steps, spec.dt());
  std::uniform_real_distribution<double> dist(-scale, scale);
  for (Vec2& u : schedule.controls.values) {
    u.x() = dist(rng);
    u.y() = dist(rng);
  }
  return schedule;
}

SuiteResult::Check gradient_check_on(const std::string& name,
                                     const ScenarioSpec& spec,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const ControlSchedule schedule = random_schedule(spec, rng, 1.0);
  GradientCheckOptions options;
  options.n_probes = 24;
  options.fd_step = 1e-6;
  options.seed = seed;
  const GradientCheckReport report = check_gradient(spec, schedule, options);

  const int total = report.probes_checked + report.probes_skipped;
  const double skip_rate = total > 0 ? double(report.probes_skipped) / total : 0.0;
  SuiteResult::Check check;
  check.name = name;
  check.measured = report.max_rel_error;
  check.pass = report.probes_checked >= 20 && report.max_rel_error < 1e-5 &&
               skip_rate < 0.10;
  check.detail = std::to_string(report.probes_checked) + " probes, " +
                 std::to_string(report.probes_skipped) + " degenerate skips";
  return check;
}

}  // namespace

SuiteResult run_ot_exact_suite(std::uint64_t seed) {
  SuiteResult result;
  std::mt19937_64 rng(seed);

  // Exactness vs enumeration: uniform-square instances are audited against
  // the permutation oracle (sizes up to 6), general rational-weight
  // instances against polytope vertex enumeration (sizes up to 4).
  {
    double worst_gap = 0.0, worst_marginal = 0.0, worst_assign = 0.0;
    bool dominated = true;
    std::uniform_int_distribution<int> square_size(2, 6);
    std::uniform_int_distribution<int> general_size(1, 4);
    for (int instance = 0; instance < 200; ++instance) {
      if (instance % 2 == 0) {
        const int n = square_size(rng);
        const CostMatrix cost = random_cost(rng, n, n);
        const Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
        const TransportPlan plan = solve_exact(w, w, cost);
        const double oracle = brute_force_assignment_value(cost) / n;
        worst_gap = std::max(worst_gap,
                             std::abs(plan.value - oracle) / std::max(1e-30, oracle));
        worst_marginal = std::max(worst_marginal, marginal_error(plan, w, w));
        const Assignment assignment = solve_assignment(cost);
        worst_assign = std::max(
            worst_assign, std::abs(plan.value - assignment.value / n));
      } else {
        const int n = general_size(rng), m = general_size(rng);
        const CostMatrix cost = random_cost(rng, n, m);
        const Eigen::VectorXd a = random_rational_weights(rng, n);
        const Eigen::VectorXd b = random_rational_weights(rng, m);
        const TransportPlan plan = solve_exact(a, b, cost);
        const auto vertices = transport_vertex_values(a, b, cost);
        double oracle = kInf;
        for (double v : vertices) {
          oracle = std::min(oracle, v);
          if (plan.value > v + 1e-9) dominated = false;
        }
        worst_gap = std::max(worst_gap,
                             std::abs(plan.value - oracle) / std::max(1e-30, oracle));
        worst_marginal = std::max(worst_marginal, marginal_error(plan, a, b));
      }
    }
    result.checks.push_back({"exact value vs enumeration oracle (200 instances)",
                             worst_gap < 1e-9 && dominated, worst_gap,
                             "max relative gap"});
    result.checks.push_back({"exact marginal feasibility",
                             worst_marginal < 1e-9, worst_marginal,
                             "max |marginal - weight|"});
    result.checks.push_back({"assignment consistency on uniform squares",
                             worst_assign < 1e-9, worst_assign,
                             "max |exact - assignment/n|"});
  }
  return result;
}

SuiteResult run_sinkhorn_suite(std::uint64_t seed) {
  SuiteResult result;
  std::mt19937_64 rng(seed);

  // Sinkhorn at eps = 1e-3 * mean(C) against the exact value.
  {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> mass(0.5, 1.5);
    double worst_rel = 0.0;
    for (int instance = 0; instance < 50; ++instance) {
      std::vector<Vec2> src(10), dst(10);
      for (auto& p : src) p = Vec2(unit(rng), unit(rng));
      for (auto& p : dst) p = Vec2(unit(rng), unit(rng));
      const CostMatrix cost = squared_distance_matrix(src, dst);
      Eigen::VectorXd a(10), b(10);
      for (int i = 0; i < 10; ++i) {
        a[i] = mass(rng);
        b[i] = mass(rng);
      }
      const TransportPlan exact = solve_exact(a, b, cost);
      SinkhornOptions options;
      options.epsilon = 1e-3 * cost.entries.mean();
      options.max_iter = 100000;
      options.tol = 1e-7;
      const TransportPlan approx = solve_sinkhorn(a, b, cost, options);
      worst_rel = std::max(worst_rel,
                           std::abs(approx.value - exact.value) /
                               std::max(1e-30, exact.value));
    }
    result.checks.push_back({"sinkhorn value within 1% of exact (50 x 10x10)",
                             worst_rel < 0.01, worst_rel,
                             "max relative error"});
  }
  return result;
}

SuiteResult run_ot_suite(std::uint64_t seed) {
  SuiteResult result = run_ot_exact_suite(seed);
  const SuiteResult sinkhorn = run_sinkhorn_suite(seed);
  result.checks.insert(result.checks.end(), sinkhorn.checks.begin(),
                       sinkhorn.checks.end());
  return result;
}

SuiteResult run_gradient_suite(std::uint64_t seed) {
  SuiteResult result;

  ShapeTermConfig terminal_shape;
  terminal_shape.mode = ShapeCostSpec::Mode::Terminal;
  terminal_shape.weight = 3.0;
  terminal_shape.reference =
      std::vector<Vec2>{{1.3, 0.4}, {0.9, -0.7}, {1.8, 0.1}, {0.2, 1.1}};
  terminal_shape.b_weights = Eigen::Vector4d(2.0, 1.0, 3.0, 2.0);

  ShapeTermConfig running_shape;
  running_shape.mode = ShapeCostSpec::Mode::Running;
  running_shape.weight = 2.0;
  running_shape.centered = true;
  running_shape.reference =
      std::vector<Vec2>{{0.0, 0.6}, {-0.4, -0.5}, {0.7, -0.2}};

  // close enough to the probe swarm that the smooth outer branch is active
  ObstacleTerm obstacle;
  obstacle.weight = 1.5;
  obstacle.obstacles = {ObstacleSpec{Vec2(0.7, 0.2), 0.3, 2.0, 3.0}};

  const std::vector<std::pair<std::string, CostTermConfig>> single_terms = {
      {"shape_terminal", terminal_shape},
      {"shape_running", running_shape},
      {"control_effort", ControlEffortTerm{1.7}},
      {"terminal_velocity", TerminalVelocityTerm{2.2}},
      {"congestion", CongestionTerm{0.8, 0.3}},
      {"obstacle", obstacle},
      {"mean_destination", MeanDestinationTerm{2.5, Vec2(1.0, -0.5)}},
  };
  int salt = 0;
  for (const auto& [label, term] : single_terms) {
    const ScenarioSpec spec =
        single_term_scenario("probe-" + label, term, 6, 12);
    result.checks.push_back(
        gradient_check_on("gradient: " + label, spec, seed + 17 * ++salt));
  }

  for (const ScenarioSpec& spec : catalog_scenarios()) {
    result.checks.push_back(gradient_check_on("gradient: scenario " + spec.name,
                                              spec, seed + 1000 + 17 * ++salt));
  }
  return result;
}

SuiteResult run_lqr_suite() {
  SuiteResult result;
  for (const double dt : {0.05, 0.02}) {
    for (const int steps : {20, 50}) {
      LqrProblem problem;
      problem.dt = dt;
      problem.steps = steps;
      problem.initial = Eigen::Vector4d::Zero();
      problem.target = Vec2(1.5, 1.0);
      const ControlGrid oracle = solve_lqr_riccati(problem);

      ScenarioSpec spec;
      spec.name = "lqr-probe";
      spec.initial = std::vector<Vec2>{{0.0, 0.0}};
      spec.horizon = dt * steps;
      spec.steps = steps;
      spec.cost_terms = {MeanDestinationTerm{1.0, problem.target},
                         ControlEffortTerm{1.0}};

      // step size just under the curvature bound of the quadratic
      const double lipschitz =
          std::pow(dt, 4) * std::pow(steps, 3) / 3.0 + dt + 1e-9;
      OptimizerOptions options;
      options.alpha = 0.9 / lipschitz;
      options.tol = options.alpha * 5e-8;
      options.max_iters = 200000;
      options.record_every = 10000;
      const OptimizationResult run = optimize(spec, options);

      double max_diff = 0.0;
      for (int s = 0; s < steps; ++s) {
        const Vec2 d = run.schedule.controls.at(0, s) - oracle.at(0, s);
        max_diff = std::max({max_diff, std::abs(d.x()), std::abs(d.y())});
      }
      SuiteResult::Check check;
      check.name = "lqr dt=" + format_double(dt) + " S=" + std::to_string(steps);
      check.measured = max_diff;
      check.pass = run.converged && max_diff < 1e-4;
      check.detail = std::to_string(run.iterations_run) + " iterations";
      result.checks.push_back(check);
    }
  }
  return result;
}

}  // namespace otshape::verify
