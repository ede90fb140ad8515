#include "otshape/transport.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

namespace otshape {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void validate_weights(const Eigen::VectorXd& w, Eigen::Index expected,
                      const char* side) {
  if (w.size() != expected) {
    throw InvalidInputError(std::string(side) +
                            " weight count does not match cost matrix");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w[i]) || w[i] < 0.0) {
      throw InvalidInputError(std::string(side) +
                              " weights must be finite and nonnegative");
    }
    total += w[i];
  }
  if (total <= 0.0) {
    throw InvalidInputError(std::string(side) + " weights have zero total mass");
  }
}

void validate_cost(const CostMatrix& cost) {
  if (cost.rows() < 1 || cost.cols() < 1) {
    throw InvalidInputError("cost matrix is empty");
  }
  if (!cost.entries.allFinite() || (cost.entries.array() < 0.0).any()) {
    throw InvalidInputError("cost matrix entries must be finite and >= 0");
  }
}

// Transportation-network simplex over the complete bipartite graph.
// The basis is a spanning tree on n row nodes + m column nodes, kept as a
// boolean cell mask plus persistent adjacency lists; potentials and pivot
// cycles are recovered by walking that tree in O(n+m). Entering arc: most
// negative reduced cost (Dantzig) while progress is being made, switching to
// Bland's rule (first eligible cell in row-major order, lowest-index leaving
// tie-break) during degenerate streaks so cycling is impossible.
class TransportSimplex {
 public:
  TransportSimplex(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                   const Eigen::MatrixXd& cost)
      : a_(a), b_(b), cost_(cost), n_(static_cast<int>(a.size())),
        m_(static_cast<int>(b.size())), flow_(Eigen::MatrixXd::Zero(n_, m_)),
        basic_(n_ * m_, 0), adj_(n_ + m_), u_(n_), v_(m_),
        parent_(n_ + m_), order_(n_ + m_) {}

  // Returns (plan, pivot count).
  std::pair<Eigen::MatrixXd, int> solve() {
    northwest_corner_start();
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < m_; ++j) {
        if (basic_[i * m_ + j]) link(i, j);
      }
    }
    const double scale = 1.0 + cost_.cwiseAbs().maxCoeff();
    const double enter_tol = 1e-12 * scale;
    const long max_pivots = 2000L * (n_ + m_) + 10000;
    const int bland_trigger = 2 * (n_ + m_) + 8;

    int pivots = 0;
    int degenerate_streak = 0;
    while (true) {
      compute_potentials();
      const bool bland = degenerate_streak > bland_trigger;
      int enter_i = -1, enter_j = -1;
      double most_negative = -enter_tol;
      for (int i = 0; i < n_ && (!bland || enter_i < 0); ++i) {
        const double ui = u_[i];
        for (int j = 0; j < m_; ++j) {
          if (basic_[i * m_ + j]) continue;
          const double reduced = cost_(i, j) - ui - v_[j];
          if (reduced < most_negative) {
            enter_i = i;
            enter_j = j;
            if (bland) break;  // first eligible cell wins
            most_negative = reduced;
          }
        }
      }
      if (enter_i < 0) break;  // optimal
      if (++pivots > max_pivots) {
        throw SolverFailureError(
            "transport simplex exceeded its pivot guard without converging");
      }
      const double theta = pivot(enter_i, enter_j);
      degenerate_streak = theta > 0.0 ? 0 : degenerate_streak + 1;
    }
    resolve_flows_from_basis();
    return {flow_, pivots};
  }

 private:
  // Exactly n+m-1 basic cells; ties produce degenerate zero-mass cells.
  void northwest_corner_start() {
    int i = 0, j = 0;
    double rem_a = a_[0], rem_b = b_[0];
    for (int k = 0; k < n_ + m_ - 1; ++k) {
      const double t = std::min(rem_a, rem_b);
      flow_(i, j) = t;
      basic_[i * m_ + j] = 1;
      rem_a -= t;
      rem_b -= t;
      if (i == n_ - 1 && j == m_ - 1) break;
      bool move_down;
      if (i == n_ - 1) {
        move_down = false;
      } else if (j == m_ - 1) {
        move_down = true;
      } else {
        move_down = rem_a <= rem_b;
      }
      if (move_down) {
        ++i;
        rem_a = a_[i];
      } else {
        ++j;
        rem_b = b_[j];
      }
    }
  }

  // Nodes 0..n-1 are rows, n..n+m-1 are columns; edges are cell indices.
  void link(int i, int j) {
    adj_[i].push_back(i * m_ + j);
    adj_[n_ + j].push_back(i * m_ + j);
  }

  void unlink(int i, int j) {
    const int cell = i * m_ + j;
    auto drop = [cell](std::vector<int>& edges) {
      for (size_t k = 0; k < edges.size(); ++k) {
        if (edges[k] == cell) {
          edges[k] = edges.back();
          edges.pop_back();
          return;
        }
      }
    };
    drop(adj_[i]);
    drop(adj_[n_ + j]);
  }

  // BFS over the basis tree from row 0; also records the traversal order and
  // parents so pivot cycles can reuse them.
  void compute_potentials() {
    std::fill(parent_.begin(), parent_.end(), -2);
    int head = 0, tail = 0;
    order_[tail++] = 0;
    parent_[0] = -1;
    u_[0] = 0.0;
    while (head < tail) {
      const int node = order_[head++];
      for (int cell : adj_[node]) {
        const int row = cell / m_, col = cell % m_;
        const int next = node < n_ ? n_ + col : row;
        if (parent_[next] != -2) continue;
        parent_[next] = node;
        if (node < n_) {
          v_[col] = cost_(row, col) - u_[row];
        } else {
          u_[row] = cost_(row, col) - v_[col];
        }
        order_[tail++] = next;
      }
    }
  }

  // Cycle created by the entering cell: the entering cell plus the tree path
  // between its endpoints. Depths come from the BFS above. Cells at odd
  // positions give up mass, even positions receive it.
  double pivot(int enter_i, int enter_j) {
    cycle_.clear();
    cycle_.emplace_back(enter_i, enter_j);
    // walk both endpoints to the root, then trim to the common path
    path_a_.clear();
    path_b_.clear();
    for (int node = enter_i; node != -1; node = parent_[node]) {
      path_a_.push_back(node);
    }
    for (int node = n_ + enter_j; node != -1; node = parent_[node]) {
      path_b_.push_back(node);
    }
    while (path_a_.size() >= 2 && path_b_.size() >= 2 &&
           path_a_[path_a_.size() - 1] == path_b_[path_b_.size() - 1] &&
           path_a_[path_a_.size() - 2] == path_b_[path_b_.size() - 2]) {
      path_a_.pop_back();
      path_b_.pop_back();
    }
    // column-side path first so signs alternate starting at the entering cell
    for (size_t k = 0; k + 1 < path_b_.size(); ++k) {
      cycle_.push_back(edge_cell(path_b_[k], path_b_[k + 1]));
    }
    for (size_t k = path_a_.size() - 1; k > 0; --k) {
      cycle_.push_back(edge_cell(path_a_[k], path_a_[k - 1]));
    }

    double theta = kInf;
    int leave_pos = -1;
    long leave_index = -1;
    for (size_t k = 1; k < cycle_.size(); k += 2) {
      const auto [i, j] = cycle_[k];
      const long index = static_cast<long>(i) * m_ + j;
      const double x = flow_(i, j);
      if (x < theta || (x == theta && index < leave_index)) {
        theta = x;
        leave_pos = static_cast<int>(k);
        leave_index = index;
      }
    }
    for (size_t k = 0; k < cycle_.size(); ++k) {
      const auto [i, j] = cycle_[k];
      flow_(i, j) += (k % 2 == 0) ? theta : -theta;
      if (flow_(i, j) < 0.0) flow_(i, j) = 0.0;  // pivot round-off
    }
    const auto [li, lj] = cycle_[leave_pos];
    flow_(li, lj) = 0.0;
    basic_[li * m_ + lj] = 0;
    basic_[enter_i * m_ + enter_j] = 1;
    unlink(li, lj);
    link(enter_i, enter_j);
    return theta;
  }

  std::pair<int, int> edge_cell(int x, int y) const {
    const int row = x < n_ ? x : y;
    const int col = x < n_ ? y - n_ : x - n_;
    return {row, col};
  }

  // Flows on a spanning tree are uniquely determined by the marginals.
  // Recomputing them by leaf elimination removes the round-off the pivot
  // updates accumulate, so the returned plan meets the 1e-9 marginal
  // tolerance with lots of headroom.
  void resolve_flows_from_basis() {
    std::vector<int> degree(n_ + m_);
    for (int node = 0; node < n_ + m_; ++node) {
      degree[node] = static_cast<int>(adj_[node].size());
    }
    Eigen::VectorXd rem_a = a_, rem_b = b_;
    std::vector<char> consumed(n_ * m_, 0);
    std::deque<int> leaves;
    for (int node = 0; node < n_ + m_; ++node) {
      if (degree[node] == 1) leaves.push_back(node);
    }
    flow_.setZero();
    while (!leaves.empty()) {
      const int node = leaves.front();
      leaves.pop_front();
      if (degree[node] != 1) continue;  // became interior or exhausted
      int cell = -1;
      for (int c : adj_[node]) {
        if (!consumed[c]) {
          cell = c;
          break;
        }
      }
      if (cell < 0) break;  // last edge already consumed from the other side
      const int row = cell / m_, col = cell % m_;
      const double x = node < n_ ? rem_a[row] : rem_b[col];
      flow_(row, col) = std::max(0.0, x);
      rem_a[row] -= x;
      rem_b[col] -= x;
      consumed[cell] = 1;
      const int mate = node < n_ ? n_ + col : row;
      --degree[node];
      --degree[mate];
      if (degree[mate] == 1) leaves.push_back(mate);
    }
  }

  const Eigen::VectorXd& a_;
  const Eigen::VectorXd& b_;
  const Eigen::MatrixXd& cost_;
  const int n_, m_;
  Eigen::MatrixXd flow_;
  std::vector<char> basic_;
  std::vector<std::vector<int>> adj_;
  std::vector<double> u_, v_;
  std::vector<int> parent_, order_;
  std::vector<std::pair<int, int>> cycle_;
  std::vector<int> path_a_, path_b_;
};

double max_elem(double init, const Eigen::VectorXd& v) {
  double out = init;
  for (Eigen::Index i = 0; i < v.size(); ++i) out = std::max(out, v[i]);
  return out;
}

// log(sum exp(x_i)) tolerating -inf entries (zero-mass atoms).
double log_sum_exp(const Eigen::VectorXd& x) {
  const double c = max_elem(-kInf, x);
  if (c == -kInf) return -kInf;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] == -kInf) continue;
    acc += std::exp(x[i] - c);
  }
  return c + std::log(acc);
}

}  // namespace

TransportPlan solve_exact(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          const CostMatrix& cost) {
  validate_cost(cost);
  validate_weights(a, cost.entries.rows(), "source");
  validate_weights(b, cost.entries.cols(), "target");

  const Eigen::VectorXd an = a / a.sum();
  const Eigen::VectorXd bn = b / b.sum();
  TransportSimplex simplex(an, bn, cost.entries);
  auto [flow, pivots] = simplex.solve();

  TransportPlan plan;
  plan.coupling = std::move(flow);
  plan.value = (plan.coupling.array() * cost.entries.array()).sum();
  plan.solver_tag = SolverTag::Exact;
  plan.converged = true;
  plan.iterations = pivots;
  plan.marginal_error =
      std::max((plan.coupling.rowwise().sum() - an).cwiseAbs().maxCoeff(),
               (plan.coupling.colwise().sum().transpose() - bn)
                   .cwiseAbs()
                   .maxCoeff());
  return plan;
}

Assignment solve_assignment(const CostMatrix& cost) {
  validate_cost(cost);
  const int n = cost.rows();
  if (n != cost.cols()) {
    throw InvalidInputError("assignment requires a square cost matrix");
  }
  const Eigen::MatrixXd& c = cost.entries;

  // Hungarian method with dual potentials and shortest augmenting paths.
  // 1-based working arrays; p[j] is the row matched to column j.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment out;
  out.target_of_source.assign(n, -1);
  for (int j = 1; j <= n; ++j) out.target_of_source[p[j] - 1] = j - 1;
  for (int i = 0; i < n; ++i) out.value += c(i, out.target_of_source[i]);
  return out;
}

TransportPlan solve_sinkhorn(const Eigen::VectorXd& a,
                             const Eigen::VectorXd& b, const CostMatrix& cost,
                             const SinkhornOptions& options) {
  validate_cost(cost);
  validate_weights(a, cost.entries.rows(), "source");
  validate_weights(b, cost.entries.cols(), "target");
  if (!(options.epsilon > 0.0) || !std::isfinite(options.epsilon)) {
    throw InvalidInputError("sinkhorn epsilon must be a positive real");
  }
  if (options.max_iter < 1 || !(options.tol > 0.0)) {
    throw InvalidInputError("sinkhorn needs max_iter >= 1 and tol > 0");
  }

  const int n = cost.rows(), m = cost.cols();
  const double eps = options.epsilon;
  const Eigen::MatrixXd& c = cost.entries;
  const Eigen::VectorXd an = a / a.sum();
  const Eigen::VectorXd bn = b / b.sum();
  const Eigen::VectorXd log_a = an.array().log();  // -inf on zero-mass atoms
  const Eigen::VectorXd log_b = bn.array().log();

  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd coupling(n, m);

  auto check_finite = [&](const Eigen::VectorXd& pot, const Eigen::VectorXd& mass) {
    for (Eigen::Index k = 0; k < pot.size(); ++k) {
      if (mass[k] > 0.0 && !std::isfinite(pot[k])) {
        throw EpsilonUnderflowError(
            "sinkhorn scaling underflowed; increase epsilon");
      }
    }
  };

  double err = kInf;
  int it = 0;
  bool converged = false;
  Eigen::VectorXd scratch;
  while (it < options.max_iter) {
    ++it;
    for (int i = 0; i < n; ++i) {
      scratch = (g - c.row(i).transpose()) / eps;
      f[i] = log_a[i] == -kInf ? -kInf
                               : eps * log_a[i] - eps * log_sum_exp(scratch);
    }
    check_finite(f, an);
    for (int j = 0; j < m; ++j) {
      scratch = (f - c.col(j)) / eps;
      g[j] = log_b[j] == -kInf ? -kInf
                               : eps * log_b[j] - eps * log_sum_exp(scratch);
    }
    check_finite(g, bn);

    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m; ++j) {
        const double e = f[i] + g[j] - c(i, j);
        coupling(i, j) = e == -kInf ? 0.0 : std::exp(e / eps);
      }
    }
    err = std::max(
        (coupling.rowwise().sum() - an).cwiseAbs().maxCoeff(),
        (coupling.colwise().sum().transpose() - bn).cwiseAbs().maxCoeff());
    if (err < options.tol) {
      converged = true;
      break;
    }
  }

  TransportPlan plan;
  plan.coupling = std::move(coupling);
  plan.value = (plan.coupling.array() * c.array()).sum();
  plan.solver_tag = SolverTag::Sinkhorn;
  plan.converged = converged;
  plan.marginal_error = err;
  plan.iterations = it;
  return plan;
}

double emd_value(const TransportPlan& plan, const CostMatrix& cost) {
  if (plan.rows() != cost.rows() || plan.cols() != cost.cols()) {
    throw InvalidInputError("plan and cost matrix dimensions do not match");
  }
  return (plan.coupling.array() * cost.entries.array()).sum();
}

}  // namespace otshape
