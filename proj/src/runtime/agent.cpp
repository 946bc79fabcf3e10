#include "wcadmm/runtime/agent.hpp"

#include "wcadmm/consensus.hpp"
#include "wcadmm/errors.hpp"

namespace wcadmm::runtime {

void run_agent(AgentSetup setup, AgentLink& link) {
  const int n = setup.prox.kernel->size();
  std::optional<std::string> invalid;
  try {
    setup.spec.validate(n);
  } catch (const Error& e) {
    invalid = e.what();
  }

  ProbabilityVector mu = setup.initial;
  Vector nu = Vector::Zero(n);
  Vector u = Vector::Zero(n);
  std::optional<SinkhornScalings> warm;

  while (true) {
    CoordinatorMessage msg = Halt{};
    try {
      msg = link.receive();
    } catch (const RuntimeFault&) {
      return;
    }
    if (std::holds_alternative<Halt>(msg)) return;

    if (auto* b = std::get_if<Broadcast>(&msg)) {
      try {
        if (invalid) throw ValidationError(*invalid);
        const ProbabilityVector zeta = validate_simplex(b->zeta, setup.prox.simplex_tol);
        if (b->round > 0) nu = dual_ascent(nu, mu, zeta, setup.prox.alpha);
        auto r = agent_mu_update(zeta, setup.spec, nu, setup.prox, mu, warm);
        mu = std::move(r.mu);
        warm = std::move(r.scalings);
        link.send(MuUpdate{setup.id, b->round, mu.weights()});
      } catch (const std::exception& e) {
        link.send(Fault{setup.id, b->round, e.what()});
      }
    } else if (auto* t = std::get_if<InnerTarget>(&msg)) {
      try {
        if (invalid) throw ValidationError(*invalid);
        auto r = solve_agent_subproblem(mu, *setup.prox.kernel, t->u_target, t->rho, u,
                                        setup.inner);
        u = std::move(r.u);
        link.send(DualGradient{setup.id, t->round, u, std::move(r.gradient)});
      } catch (const std::exception& e) {
        link.send(Fault{setup.id, t->round, e.what()});
      }
    }
  }
}

}  // namespace wcadmm::runtime
