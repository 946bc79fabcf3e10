#pragma once

// The zeta-update of the outer loop: a Sinkhorn barycenter with a linear
// term,
//
//   zeta = argmin_zeta sum_i W_eps(mu_i, zeta) - (2/alpha) <nu_sum, zeta>,
//
// computed through its dual
//
//   min_u sum_i f_i^*(u_i)   s.t.   sum_i u_i = (2/alpha) nu_sum,
//   f_i = W_eps(mu_i, .),
//
// with a sharing ADMM: agents minimize f_i^*(u) + rho/2 |u - target_i|^2
// independently, the coordinator projects onto the affine constraint and
// updates the scaled multipliers. zeta is the average of grad f_i^*(u_i).

#include "wcadmm/measures.hpp"

#include <limits>
#include <vector>

namespace wcadmm {

struct BarycenterProblem {
  std::vector<ProbabilityVector> mus;
  Vector nu_sum;
  double alpha = 1.0;
  KernelPtr kernel;
};

void validate(const BarycenterProblem& prob);

/// (2/alpha) nu_sum
Vector coupling_rhs(const BarycenterProblem& prob);

struct InnerOptions {
  /// Primal |u - v|, dual rho |v - v_prev| (stacked 2-norms) and
  /// |sum u - b|_1 must all fall below this.
  double tol = 1e-8;
  int max_iter = 20000;
  double rho = 1.0;
  /// Residual balancing: rho doubles/halves when the residuals differ by 10x.
  bool adapt_rho = true;
  /// Agent subproblems: damped Newton with backtracking until the
  /// gradient's max-norm is below subproblem_tol or the cap is reached.
  double subproblem_tol = 1e-8;
  int subproblem_max_iter = 200;
  double gradient_agreement_tol = 1e-6;
  double simplex_tol = kDefaultSimplexTol;
  /// Measures with zero entries are restricted to their support.
  bool allow_zeros = false;
  std::size_t threads = 1;
};

struct InnerDualState {
  std::vector<Vector> us;     ///< agent duals
  std::vector<Vector> vs;     ///< coordinator copies, sum(vs) = b
  std::vector<Vector> ws;     ///< scaled ADMM multipliers
  std::vector<Vector> grads;  ///< grad f_i^*(u_i) reported with us
  Vector zbar;                ///< mean violation removed by the last projection
  double rho = 1.0;
  int iteration = 0;
  double primal_residual = std::numeric_limits<double>::infinity();
  double dual_residual = std::numeric_limits<double>::infinity();
  double feasibility = std::numeric_limits<double>::infinity();
};

/// Zero state, or a warm start whose vs are re-projected onto the (possibly
/// new) constraint.
InnerDualState initial_inner_state(const BarycenterProblem& prob, const InnerOptions& options,
                                   const InnerDualState* warm = nullptr);

/// Subtracts the mean violation (sum(blocks) - b)/n from every block and
/// returns it.
Vector project_onto_sum(std::vector<Vector>& blocks, const Vector& b);

struct AgentSubproblemResult {
  Vector u;
  Vector gradient;  ///< grad f^*(u)
  int iterations;
  double gradient_norm;  ///< max-norm of the subproblem gradient at u
};

/// argmin_u f^*(u) + rho/2 |u - target|^2 starting from `start`.
AgentSubproblemResult solve_agent_subproblem(const ProbabilityVector& mu, const GibbsKernel& kernel,
                                             const Vector& target, double rho, const Vector& start,
                                             const InnerOptions& options);

/// target_i = v_i - w_i
std::vector<Vector> inner_targets(const InnerDualState& state);

/// Coordinator half of a round: consumes the agents' new (u_i, grad_i),
/// projects, updates multipliers and residuals, and adapts rho.
InnerDualState absorb_agent_updates(const InnerDualState& state, std::vector<Vector> us,
                                    std::vector<Vector> grads, const Vector& b,
                                    const InnerOptions& options);

bool inner_converged(const InnerDualState& state, const InnerOptions& options);

/// One synchronized round: targets, agent subproblems (concurrently), then
/// absorb_agent_updates.
InnerDualState inner_admm_step(const InnerDualState& state, const BarycenterProblem& prob,
                               const InnerOptions& options);

/// max over pairs of |g_i - g_j|_1
double gradient_disagreement(const std::vector<Vector>& grads);

/// Average of the agent gradients, renormalized onto the simplex.
ProbabilityVector recover_zeta(const std::vector<Vector>& grads, double simplex_tol);

struct InnerTraceEntry {
  int iteration;
  double primal;
  double dual;
  double rho;
};

struct BarycenterDiagnostics {
  int inner_iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double feasibility = 0.0;
  double gradient_disagreement = 0.0;
  std::vector<InnerTraceEntry> trace;
};

struct ZetaUpdateResult {
  ProbabilityVector zeta;
  InnerDualState state;
  BarycenterDiagnostics diagnostics;
};

/// With one agent the constraint pins u_1 = b and no ADMM round runs.
ZetaUpdateResult solve_zeta_update(const BarycenterProblem& prob, const InnerOptions& options,
                                   const InnerDualState* warm = nullptr);

/// Final checks shared by the in-process and distributed drivers: throws
/// ConsistencyError when gradients disagree, returns the recovered zeta.
ProbabilityVector finish_zeta_update(const InnerDualState& state, const Vector& b,
                                     const InnerOptions& options, BarycenterDiagnostics& diag);

}  // namespace wcadmm
