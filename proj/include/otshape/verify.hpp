#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "otshape/dynamics.hpp"
#include "otshape/measure.hpp"
#include "otshape/transport.hpp"

namespace otshape::verify {

// Independent oracles. These deliberately share no code with the solvers
// they audit: assignment and transport optima come from exhaustive
// enumeration, LQR solutions from a Riccati recursion, and gradients (see
// check_gradient) from central finite differences.

/// Minimum assignment cost by enumerating all n! permutations (n <= 8).
double brute_force_assignment_value(const CostMatrix& cost);

/// Minimum transport cost by enumerating every basic feasible solution of
/// the transportation polytope (all spanning-tree bases of the complete
/// bipartite graph). Weights are normalized to sum 1. Intended for n, m <= 4.
double brute_force_transport_value(const Eigen::VectorXd& a,
                                   const Eigen::VectorXd& b,
                                   const CostMatrix& cost);

/// All basic feasible objective values (used to confirm the solver's value
/// is <= every vertex of the polytope).
std::vector<double> transport_vertex_values(const Eigen::VectorXd& a,
                                            const Eigen::VectorXd& b,
                                            const CostMatrix& cost);

struct LqrProblem {
  double dt = 0.05;
  int steps = 20;
  Eigen::Vector4d initial = Eigen::Vector4d::Zero();  // (px, py, vx, vy)
  Vec2 target = Vec2::Zero();
  double terminal_weight = 1.0;  // on |p(T) - target|^2 / 2
  double control_weight = 1.0;   // on dt * sum |u|^2 / 2
};

/// Optimal control sequence for the double integrator with quadratic
/// terminal position cost and control effort, from the discrete Riccati
/// backward recursion.
ControlGrid solve_lqr_riccati(const LqrProblem& problem);

struct SuiteResult {
  struct Check {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    std::string detail;
  };
  std::vector<Check> checks;

  bool all_pass() const;
};

/// Exact-solver optimality vs enumeration on 200 random rational instances,
/// marginal feasibility, and assignment consistency.
SuiteResult run_ot_exact_suite(std::uint64_t seed);

/// Sinkhorn value agreement with the exact solver on 50 random 10x10
/// instances at eps = 1e-3 * mean(C).
SuiteResult run_sinkhorn_suite(std::uint64_t seed);

/// Both of the above, in order.
SuiteResult run_ot_suite(std::uint64_t seed);

/// Finite-difference audit of every cost term in isolation and of the full
/// objective gradient on each catalog scenario (>= 20 probes each).
SuiteResult run_gradient_suite(std::uint64_t seed);

/// optimize() vs the Riccati oracle for (dt, S) in {0.05, 0.02} x {20, 50};
/// passes when controls agree within 1e-4 max-norm.
SuiteResult run_lqr_suite();

}  // namespace otshape::verify
