#pragma once

#include <Eigen/Core>
#include <vector>

#include "otshape/measure.hpp"

namespace otshape {

enum class SolverTag { Exact, Sinkhorn };

/// Coupling matrix with prescribed marginals plus the transport cost it
/// realizes. Marginals match the *normalized* source/target weights: exact
/// solves to ~1e-9 absolute, Sinkhorn solves to the achieved marginal_error.
struct TransportPlan {
  Eigen::MatrixXd coupling;
  double value = 0.0;
  SolverTag solver_tag = SolverTag::Exact;

  /// False when Sinkhorn hit max_iter before reaching its tolerance.
  bool converged = true;
  /// Max-norm marginal violation actually achieved.
  double marginal_error = 0.0;
  /// Sinkhorn iterations or simplex pivots performed.
  int iterations = 0;

  int rows() const { return static_cast<int>(coupling.rows()); }
  int cols() const { return static_cast<int>(coupling.cols()); }
};

/// Exact optimal transport between weight vectors a and b under `cost`,
/// solved with a transportation-network simplex (Bland's-rule pivoting,
/// northwest-corner start). Both weight vectors are normalized to sum 1
/// before solving, so values are comparable across point counts.
TransportPlan solve_exact(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          const CostMatrix& cost);

struct Assignment {
  std::vector<int> target_of_source;  // sigma: source index -> target index
  double value = 0.0;                 // sum of cost[i][sigma(i)]
};

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method
/// with dual potentials, O(n^3)). Under uniform weights the optimal plan is a
/// permutation and solve_exact's value equals this value divided by n.
Assignment solve_assignment(const CostMatrix& cost);

struct SinkhornOptions {
  double epsilon = 1e-2;
  int max_iter = 10000;
  double tol = 1e-9;  // max-norm marginal violation target
};

/// Entropically regularized transport via log-domain Sinkhorn iteration
/// (log-sum-exp updates, stable at small epsilon). Returns the plan
/// diag(u) K diag(v) with K = exp(-C/epsilon). Hitting max_iter is not an
/// error: the plan comes back with converged=false and the achieved
/// marginal_error. Throws EpsilonUnderflowError if the potentials leave the
/// representable range (epsilon too small for the cost scale).
TransportPlan solve_sinkhorn(const Eigen::VectorXd& a,
                             const Eigen::VectorXd& b, const CostMatrix& cost,
                             const SinkhornOptions& options);

/// Total transport cost of an explicit plan: sum of coupling * cost.
double emd_value(const TransportPlan& plan, const CostMatrix& cost);

}  // namespace otshape
