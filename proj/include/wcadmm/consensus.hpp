#pragma once

// Outer Wasserstein consensus ADMM over n agents sharing one support:
//
//   mu_i  <- prox_{(1/alpha)(F_i + <nu_i, .>)}(zeta)
//   zeta  <- barycenter of {mu_i} with linear term (2/alpha) nu_sum
//   nu_i  <- nu_i + alpha (mu_i - zeta)
//
// `run_solve` iterates to a fixed point; `run_flow` uses the single-agent
// prox as a JKO step of length 1/alpha.

#include "wcadmm/barycenter.hpp"
#include "wcadmm/entropic_ot.hpp"
#include "wcadmm/measures.hpp"
#include "wcadmm/wprox.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace wcadmm {

struct Problem {
  SupportSet support;
  std::vector<FunctionalSpec> specs;
  KernelPtr kernel;
  /// Starting measure for zeta (and every mu); uniform when empty.
  std::optional<ProbabilityVector> initial;

  /// Builds the cost and kernel and validates every spec against the support.
  static Problem make(SupportSet support, std::vector<FunctionalSpec> specs, double epsilon,
                      const KernelOptions& kernel_options = {},
                      std::optional<ProbabilityVector> initial = std::nullopt);

  std::size_t agents() const { return specs.size(); }
  int size() const { return support.size(); }
  double epsilon() const { return kernel->epsilon(); }
};

struct ConsensusParams {
  double alpha = 1.0;
  double tol_primal = 1e-6;
  double tol_dual = 1e-6;
  int max_outer = 1000;
  /// Residual balancing on alpha; solve mode only.
  bool adapt_alpha = false;
  std::size_t threads = 1;
  double prox_tol = 1e-10;
  int prox_max_iter = 200000;
  bool allow_zeros = false;
  double simplex_tol = kDefaultSimplexTol;
  InnerOptions inner;
  /// Trace wall times are reported as zero.
  bool deterministic = false;
};

void validate(const ConsensusParams& params);

struct ConsensusState {
  std::vector<ProbabilityVector> mus;
  ProbabilityVector zeta = ProbabilityVector::uniform(1);
  std::vector<Vector> nus;
  Vector nu_sum;
  int k = 0;
  std::vector<double> primal_residuals;
  double dual_residual = std::numeric_limits<double>::infinity();
  double alpha = 1.0;

  /// Warm starts carried between outer iterations.
  std::vector<std::optional<SinkhornScalings>> prox_warm;
  std::optional<InnerDualState> inner_warm;
  BarycenterDiagnostics last_inner;
};

/// zeta = mu_i = initial (or uniform), nu_i = 0.
ConsensusState initial_state(const Problem& prob, const ConsensusParams& params);

/// Summation in agent order; both drivers use it so nu_sum agrees bitwise.
Vector sum_multipliers(const std::vector<Vector>& nus);

/// nu + alpha (mu - zeta)
Vector dual_ascent(const Vector& nu, const ProbabilityVector& mu, const ProbabilityVector& zeta,
                   double alpha);

ProxParams prox_params(const Problem& prob, const ConsensusParams& params, double alpha);

/// Agent i's mu-update from its private state.
ProxResult agent_mu_update(const ProbabilityVector& zeta, const FunctionalSpec& spec,
                           const Vector& nu, const ProxParams& p, const ProbabilityVector& mu_prev,
                           const std::optional<SinkhornScalings>& warm);

/// The barycenter options an outer step uses (zero handling and simplex
/// tolerance follow the outer parameters).
InnerOptions inner_options(const ConsensusParams& params);

/// Tail of an outer step shared by every driver: given next.mus and
/// next.zeta, fills nus, nu_sum, residuals, k and alpha.
void complete_outer_step(ConsensusState& next, const ConsensusState& prev,
                         const ConsensusParams& params);

struct TraceRecord {
  int k;
  std::vector<double> primal;
  double dual;
  double wall_ms;
  int inner_iterations;
  std::vector<InnerTraceEntry> inner_trace;
};

/// Receives each record together with a read-only view of the state it
/// describes.
using TraceSink = std::function<void(const TraceRecord&, const ConsensusState&)>;

ConsensusState outer_step(const ConsensusState& state, const Problem& prob,
                          const ConsensusParams& params);

struct SolveResult {
  ConsensusState state;
  std::vector<TraceRecord> trace;
  bool converged = false;
};

bool outer_converged(const ConsensusState& state, const ConsensusParams& params);

/// Builds the trace record for a freshly completed step.
TraceRecord make_trace_record(const ConsensusState& state, double wall_ms);

/// Reaching max_outer is reported through `converged`, not an exception.
SolveResult run_solve(const Problem& prob, const ConsensusParams& params,
                      const TraceSink& sink = {});

struct FlowResult {
  /// trajectory[k] is the measure after k steps; trajectory[0] is the start.
  std::vector<ProbabilityVector> trajectory;
  double time_step;
};

/// `steps` proximal steps with zeta = mu and nu = 0. Single agent only.
FlowResult run_flow(const Problem& prob, const ConsensusParams& params, int steps);

}  // namespace wcadmm
