#include "wcadmm/consensus.hpp"

#include "wcadmm/errors.hpp"
#include "wcadmm/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace wcadmm {

Problem Problem::make(SupportSet support, std::vector<FunctionalSpec> specs, double epsilon,
                      const KernelOptions& kernel_options,
                      std::optional<ProbabilityVector> initial) {
  if (specs.empty()) throw ValidationError("problem needs at least one agent");
  for (std::size_t i = 0; i < specs.size(); ++i) {
    try {
      specs[i].validate(support.size());
    } catch (const Error& e) {
      throw AgentError(i, e.what());
    }
  }
  if (initial && initial->size() != support.size())
    throw ValidationError("initial measure does not match the support");
  auto kernel = make_kernel(build_cost_matrix(support), epsilon, kernel_options);
  return Problem{std::move(support), std::move(specs), std::move(kernel), std::move(initial)};
}

void validate(const ConsensusParams& p) {
  if (!(p.alpha > 0.0) || !std::isfinite(p.alpha)) throw ParameterError("alpha must be positive");
  if (!(p.tol_primal > 0.0)) throw ParameterError("tol_primal must be positive");
  if (!(p.tol_dual > 0.0)) throw ParameterError("tol_dual must be positive");
  if (p.max_outer < 1) throw ParameterError("max_outer must be positive");
  if (!(p.prox_tol > 0.0)) throw ParameterError("prox tolerance must be positive");
  if (p.prox_max_iter < 1) throw ParameterError("prox max_iter must be positive");
}

ConsensusState initial_state(const Problem& prob, const ConsensusParams& params) {
  const std::size_t n = prob.agents();
  const int dim = prob.size();
  ConsensusState s;
  s.zeta = prob.initial ? *prob.initial : ProbabilityVector::uniform(dim);
  s.mus.assign(n, s.zeta);
  s.nus.assign(n, Vector::Zero(dim));
  s.nu_sum = Vector::Zero(dim);
  s.primal_residuals.assign(n, std::numeric_limits<double>::infinity());
  s.alpha = params.alpha;
  s.prox_warm.assign(n, std::nullopt);
  return s;
}

Vector sum_multipliers(const std::vector<Vector>& nus) {
  Vector s = nus.front();
  for (std::size_t i = 1; i < nus.size(); ++i) s += nus[i];
  return s;
}

Vector dual_ascent(const Vector& nu, const ProbabilityVector& mu, const ProbabilityVector& zeta,
                   double alpha) {
  return nu + alpha * (mu.weights() - zeta.weights());
}

ProxParams prox_params(const Problem& prob, const ConsensusParams& params, double alpha) {
  return ProxParams{alpha,          prob.kernel,        params.prox_tol,
                    params.prox_max_iter, params.allow_zeros, params.simplex_tol};
}

ProxResult agent_mu_update(const ProbabilityVector& zeta, const FunctionalSpec& spec,
                           const Vector& nu, const ProxParams& p, const ProbabilityVector& mu_prev,
                           const std::optional<SinkhornScalings>& warm) {
  return prox_dispatch(zeta, spec, nu, p, &mu_prev, warm ? &*warm : nullptr);
}

ConsensusState outer_step(const ConsensusState& state, const Problem& prob,
                          const ConsensusParams& params) {
  const std::size_t n = prob.agents();
  if (state.mus.size() != n || state.nus.size() != n)
    throw ValidationError("state does not match the number of agents");
  const ProxParams pp = prox_params(prob, params, state.alpha);

  ConsensusState next;
  std::vector<std::optional<ProbabilityVector>> mus(n);
  next.prox_warm.resize(n);
  parallel_for(n, params.threads, [&](std::size_t i) {
    try {
      auto r = agent_mu_update(state.zeta, prob.specs[i], state.nus[i], pp, state.mus[i],
                               state.prox_warm[i]);
      mus[i] = std::move(r.mu);
      next.prox_warm[i] = std::move(r.scalings);
    } catch (const AgentError&) {
      throw;
    } catch (const Error& e) {
      throw AgentError(i, e.what());
    }
  });
  for (auto& m : mus) next.mus.push_back(std::move(*m));

  BarycenterProblem bp{next.mus, state.nu_sum, state.alpha, prob.kernel};
  auto z = solve_zeta_update(bp, inner_options(params),
                             state.inner_warm ? &*state.inner_warm : nullptr);
  next.zeta = std::move(z.zeta);
  next.inner_warm = std::move(z.state);
  next.last_inner = std::move(z.diagnostics);
  complete_outer_step(next, state, params);
  return next;
}

InnerOptions inner_options(const ConsensusParams& params) {
  InnerOptions inner = params.inner;
  inner.allow_zeros = inner.allow_zeros || params.allow_zeros;
  inner.simplex_tol = params.simplex_tol;
  return inner;
}

void complete_outer_step(ConsensusState& next, const ConsensusState& prev,
                         const ConsensusParams& params) {
  const std::size_t n = prev.nus.size();
  next.k = prev.k + 1;
  next.alpha = prev.alpha;
  next.nus.resize(n);
  next.primal_residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    next.nus[i] = dual_ascent(prev.nus[i], next.mus[i], next.zeta, prev.alpha);
    next.primal_residuals[i] = (next.mus[i].weights() - next.zeta.weights()).lpNorm<1>();
  }
  next.nu_sum = sum_multipliers(next.nus);
  next.dual_residual = prev.alpha * (next.zeta.weights() - prev.zeta.weights()).lpNorm<1>();

  if (params.adapt_alpha) {
    const double r = *std::max_element(next.primal_residuals.begin(), next.primal_residuals.end());
    if (r > 10.0 * next.dual_residual)
      next.alpha *= 2.0;
    else if (next.dual_residual > 10.0 * r)
      next.alpha /= 2.0;
  }
}

TraceRecord make_trace_record(const ConsensusState& state, double wall_ms) {
  return TraceRecord{state.k, state.primal_residuals, state.dual_residual, wall_ms,
                     state.last_inner.inner_iterations, state.last_inner.trace};
}

bool outer_converged(const ConsensusState& state, const ConsensusParams& params) {
  if (state.k == 0) return false;
  const double r = *std::max_element(state.primal_residuals.begin(), state.primal_residuals.end());
  return r <= params.tol_primal && state.dual_residual <= params.tol_dual;
}

SolveResult run_solve(const Problem& prob, const ConsensusParams& params, const TraceSink& sink) {
  validate(params);
  SolveResult out{initial_state(prob, params), {}, false};
  using clock = std::chrono::steady_clock;
  while (out.state.k < params.max_outer) {
    const auto t0 = clock::now();
    out.state = outer_step(out.state, prob, params);
    const double ms =
        params.deterministic
            ? 0.0
            : std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    TraceRecord rec = make_trace_record(out.state, ms);
    if (sink) sink(rec, out.state);
    out.trace.push_back(std::move(rec));
    if (outer_converged(out.state, params)) {
      out.converged = true;
      break;
    }
  }
  return out;
}

FlowResult run_flow(const Problem& prob, const ConsensusParams& params, int steps) {
  validate(params);
  if (prob.agents() != 1)
    throw UnsupportedError("flow mode needs exactly one agent; got " +
                           std::to_string(prob.agents()));
  if (params.adapt_alpha)
    throw UnsupportedError("alpha adaptation changes the time step and is refused in flow mode");
  if (steps < 0) throw ParameterError("steps must be nonnegative");

  const ProxParams pp = prox_params(prob, params, params.alpha);
  const Vector zero = Vector::Zero(prob.size());
  FlowResult out{{prob.initial ? *prob.initial : ProbabilityVector::uniform(prob.size())},
                 1.0 / params.alpha};
  out.trajectory.reserve(static_cast<std::size_t>(steps) + 1);
  std::optional<SinkhornScalings> warm;
  for (int k = 0; k < steps; ++k) {
    const ProbabilityVector& cur = out.trajectory.back();
    auto r = agent_mu_update(cur, prob.specs.front(), zero, pp, cur, warm);
    warm = std::move(r.scalings);
    out.trajectory.push_back(std::move(r.mu));
  }
  return out;
}

}  // namespace wcadmm
