#include "wcadmm/barycenter.hpp"

#include "wcadmm/entropic_ot.hpp"
#include "wcadmm/errors.hpp"
#include "wcadmm/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace wcadmm {

namespace {

constexpr double kRhoMin = 1e-6;
constexpr double kRhoMax = 1e6;

double stacked_norm(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]).squaredNorm();
  return std::sqrt(s);
}

Vector sum_of(const std::vector<Vector>& blocks) {
  Vector s = Vector::Zero(blocks.front().size());
  for (const auto& b : blocks) s += b;
  return s;
}

}  // namespace

void validate(const BarycenterProblem& prob) {
  if (prob.mus.empty()) throw ValidationError("barycenter needs at least one measure");
  if (!prob.kernel) throw ParameterError("barycenter problem carries no kernel");
  if (!(prob.alpha > 0.0) || !std::isfinite(prob.alpha))
    throw ParameterError("alpha must be positive");
  const int n = prob.kernel->size();
  for (std::size_t i = 0; i < prob.mus.size(); ++i)
    if (prob.mus[i].size() != n)
      throw ValidationError("measure " + std::to_string(i) + " is not on the kernel's support");
  if (prob.nu_sum.size() != n) throw ValidationError("nu_sum does not match the support");
  if (!prob.nu_sum.allFinite()) throw ValidationError("nu_sum is not finite");
}

Vector coupling_rhs(const BarycenterProblem& prob) { return (2.0 / prob.alpha) * prob.nu_sum; }

Vector project_onto_sum(std::vector<Vector>& blocks, const Vector& b) {
  if (blocks.empty()) throw ValidationError("projection of an empty block set");
  const Vector zbar = (sum_of(blocks) - b) / static_cast<double>(blocks.size());
  for (auto& x : blocks) x -= zbar;
  return zbar;
}

InnerDualState initial_inner_state(const BarycenterProblem& prob, const InnerOptions& options,
                                   const InnerDualState* warm) {
  const std::size_t n = prob.mus.size();
  const int dim = prob.kernel->size();
  const Vector b = coupling_rhs(prob);
  InnerDualState s;
  s.rho = options.rho;
  const bool usable = warm && warm->us.size() == n && warm->ws.size() == n &&
                      warm->vs.size() == n && warm->us.front().size() == dim;
  if (usable) {
    s.us = warm->us;
    s.ws = warm->ws;
    s.vs = warm->vs;
    s.rho = warm->rho;
  } else {
    s.us.assign(n, Vector::Zero(dim));
    s.ws.assign(n, Vector::Zero(dim));
    s.vs.assign(n, Vector::Zero(dim));
  }
  s.zbar = project_onto_sum(s.vs, b);
  return s;
}

AgentSubproblemResult solve_agent_subproblem(const ProbabilityVector& mu, const GibbsKernel& kernel,
                                             const Vector& target, double rho, const Vector& start,
                                             const InnerOptions& options) {
  const auto objective = [&](const Vector& x, Vector& g) {
    return conjugate_value_grad(x, mu, kernel, g, options.allow_zeros) +
           0.5 * rho * (x - target).squaredNorm();
  };
  Vector u = start;
  Vector g;
  double f = objective(u, g);
  Vector grad = g + rho * (u - target);
  double gnorm = grad.lpNorm<Eigen::Infinity>();

  // Damped Newton; rho I keeps the system positive definite.
  int it = 0;
  Vector trial_g;
  while (gnorm > options.subproblem_tol && it < options.subproblem_max_iter) {
    ++it;
    Matrix h = conjugate_hessian(u, mu, kernel, options.allow_zeros);
    h.diagonal().array() += rho;
    const Eigen::LDLT<Matrix> ldlt(h);
    Vector d = -ldlt.solve(grad);
    double slope = grad.dot(d);
    if (!d.allFinite() || !(slope < 0.0)) {
      d = -grad;
      slope = -grad.squaredNorm();
    }
    double eta = 1.0;
    bool moved = false;
    while (eta > 1e-20) {
      const Vector trial = u + eta * d;
      const double ft = objective(trial, trial_g);
      if (!std::isfinite(ft)) throw NumericError("subproblem objective became non-finite");
      if (ft <= f + 1e-4 * eta * slope) {
        u = trial;
        f = ft;
        g = trial_g;
        moved = true;
        break;
      }
      eta *= 0.5;
    }
    grad = g + rho * (u - target);
    gnorm = grad.lpNorm<Eigen::Infinity>();
    // No representable decrease left: u is optimal to rounding.
    if (!moved) break;
  }
  if (!u.allFinite() || !g.allFinite()) throw NumericError("subproblem iterate is non-finite");
  return AgentSubproblemResult{std::move(u), std::move(g), it, gnorm};
}

std::vector<Vector> inner_targets(const InnerDualState& state) {
  std::vector<Vector> t(state.vs.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = state.vs[i] - state.ws[i];
  return t;
}

InnerDualState absorb_agent_updates(const InnerDualState& state, std::vector<Vector> us,
                                    std::vector<Vector> grads, const Vector& b,
                                    const InnerOptions& options) {
  const std::size_t n = state.vs.size();
  if (us.size() != n || grads.size() != n)
    throw ValidationError("inner round received the wrong number of agent updates");
  InnerDualState next;
  next.rho = state.rho;
  next.iteration = state.iteration + 1;
  next.us = std::move(us);
  next.grads = std::move(grads);

  next.vs.resize(n);
  for (std::size_t i = 0; i < n; ++i) next.vs[i] = next.us[i] + state.ws[i];
  next.zbar = project_onto_sum(next.vs, b);

  next.ws.resize(n);
  for (std::size_t i = 0; i < n; ++i) next.ws[i] = state.ws[i] + next.us[i] - next.vs[i];

  next.primal_residual = stacked_norm(next.us, next.vs);
  next.dual_residual = state.rho * stacked_norm(next.vs, state.vs);
  next.feasibility = (sum_of(next.us) - b).lpNorm<1>();

  if (options.adapt_rho) {
    double scale = 1.0;
    if (next.primal_residual > 10.0 * next.dual_residual && next.rho * 2.0 <= kRhoMax)
      scale = 2.0;
    else if (next.dual_residual > 10.0 * next.primal_residual && next.rho / 2.0 >= kRhoMin)
      scale = 0.5;
    if (scale != 1.0) {
      next.rho *= scale;
      for (auto& w : next.ws) w /= scale;
    }
  }
  return next;
}

bool inner_converged(const InnerDualState& state, const InnerOptions& options) {
  return state.primal_residual <= options.tol && state.dual_residual <= options.tol &&
         state.feasibility <= options.tol;
}

InnerDualState inner_admm_step(const InnerDualState& state, const BarycenterProblem& prob,
                               const InnerOptions& options) {
  const std::size_t n = prob.mus.size();
  const auto targets = inner_targets(state);
  std::vector<Vector> us(n), grads(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    try {
      auto r = solve_agent_subproblem(prob.mus[i], *prob.kernel, targets[i], state.rho,
                                      state.us[i], options);
      us[i] = std::move(r.u);
      grads[i] = std::move(r.gradient);
    } catch (const Error& e) {
      throw AgentError(i, e.what());
    }
  });
  return absorb_agent_updates(state, std::move(us), std::move(grads), coupling_rhs(prob), options);
}

double gradient_disagreement(const std::vector<Vector>& grads) {
  double worst = 0.0;
  for (std::size_t i = 0; i < grads.size(); ++i)
    for (std::size_t j = i + 1; j < grads.size(); ++j)
      worst = std::max(worst, (grads[i] - grads[j]).lpNorm<1>());
  return worst;
}

ProbabilityVector recover_zeta(const std::vector<Vector>& grads, double simplex_tol) {
  const Vector mean = sum_of(grads) / static_cast<double>(grads.size());
  // Each gradient is a probability vector up to rounding; normalize only
  // removes that rounding, validate_simplex rejects anything larger.
  validate_simplex(mean, std::max(simplex_tol, 1e-6));
  return normalize(mean);
}

ProbabilityVector finish_zeta_update(const InnerDualState& state, const Vector& b,
                                     const InnerOptions& options, BarycenterDiagnostics& diag) {
  diag.inner_iterations = state.iteration;
  diag.primal_residual = state.iteration > 0 ? state.primal_residual : 0.0;
  diag.dual_residual = state.iteration > 0 ? state.dual_residual : 0.0;
  diag.feasibility = (sum_of(state.us) - b).lpNorm<1>();
  diag.gradient_disagreement = gradient_disagreement(state.grads);
  if (diag.gradient_disagreement > options.gradient_agreement_tol)
    throw ConsistencyError("inner solve converged but agent gradients disagree by " +
                           std::to_string(diag.gradient_disagreement));
  return recover_zeta(state.grads, options.simplex_tol);
}

ZetaUpdateResult solve_zeta_update(const BarycenterProblem& prob, const InnerOptions& options,
                                   const InnerDualState* warm) {
  validate(prob);
  if (!(options.tol > 0.0)) throw ParameterError("inner tolerance must be positive");
  if (!(options.rho > 0.0)) throw ParameterError("inner penalty rho must be positive");
  if (options.max_iter < 1) throw ParameterError("inner max_iter must be positive");
  const Vector b = coupling_rhs(prob);
  BarycenterDiagnostics diag;

  if (prob.mus.size() == 1) {
    InnerDualState s;
    s.rho = options.rho;
    s.us = {b};
    s.vs = {b};
    s.ws = {Vector::Zero(b.size())};
    s.zbar = Vector::Zero(b.size());
    Vector g;
    try {
      conjugate_value_grad(b, prob.mus[0], *prob.kernel, g, options.allow_zeros);
    } catch (const Error& e) {
      throw AgentError(0, e.what());
    }
    s.grads = {std::move(g)};
    s.primal_residual = s.dual_residual = s.feasibility = 0.0;
    auto zeta = finish_zeta_update(s, b, options, diag);
    return ZetaUpdateResult{std::move(zeta), std::move(s), std::move(diag)};
  }

  InnerDualState s = initial_inner_state(prob, options, warm);
  s.iteration = 0;
  while (true) {
    s = inner_admm_step(s, prob, options);
    diag.trace.push_back({s.iteration, s.primal_residual, s.dual_residual, s.rho});
    if (inner_converged(s, options)) break;
    if (s.iteration >= options.max_iter)
      throw IterationLimitError("inner ADMM hit its cap; primal " +
                                    std::to_string(s.primal_residual) + ", dual " +
                                    std::to_string(s.dual_residual),
                                std::max(s.primal_residual, s.dual_residual), s.iteration);
  }
  auto zeta = finish_zeta_update(s, b, options, diag);
  return ZetaUpdateResult{std::move(zeta), std::move(s), std::move(diag)};
}

}  // namespace wcadmm
