#pragma once

// Message vocabulary between agents and the coordinator. Nothing here can
// carry a multiplier nu_i or a functional, so agents stay isolated from each
// other's private data.

#include "wcadmm/measures.hpp"

#include <cstdint>
#include <string>
#include <variant>

namespace wcadmm::runtime {

inline constexpr std::uint32_t kAllAgents = 0xFFFFFFFFu;

// Agent -> coordinator.
struct MuUpdate {
  std::uint32_t agent_id;
  std::uint64_t round;
  Vector mu;
};
struct DualGradient {
  std::uint32_t agent_id;
  std::uint64_t round;
  Vector u;
  Vector grad;
};
struct Fault {
  std::uint32_t agent_id;
  std::uint64_t round;
  std::string error;
};
using AgentMessage = std::variant<MuUpdate, DualGradient, Fault>;

// Coordinator -> agent(s).
struct Broadcast {
  std::uint64_t round;
  Vector zeta;
};
struct InnerTarget {
  std::uint32_t agent_id;
  std::uint64_t round;
  Vector u_target;
  double rho;
};
struct Halt {
  std::string reason;
};
using CoordinatorMessage = std::variant<Broadcast, InnerTarget, Halt>;

inline std::uint32_t sender(const AgentMessage& m) {
  return std::visit([](const auto& x) { return x.agent_id; }, m);
}

}  // namespace wcadmm::runtime
