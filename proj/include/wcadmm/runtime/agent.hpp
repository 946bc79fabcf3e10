#pragma once

#include "wcadmm/barycenter.hpp"
#include "wcadmm/runtime/transport.hpp"
#include "wcadmm/wprox.hpp"

#include <optional>

namespace wcadmm::runtime {

/// Everything an agent owns privately.
struct AgentSetup {
  std::uint32_t id;
  FunctionalSpec spec;
  ProxParams prox;
  InnerOptions inner;
  ProbabilityVector initial;
};

/// Serves coordinator requests until Halt or a closed link:
///   Broadcast(zeta, k)  -> for k > 0, nu += alpha (mu - zeta); then the
///                          mu-update, answered with MuUpdate
///   InnerTarget         -> dual subproblem warm-started at the last u,
///                          answered with DualGradient
/// Failures are reported as Fault and the agent keeps serving.
void run_agent(AgentSetup setup, AgentLink& link);

}  // namespace wcadmm::runtime
