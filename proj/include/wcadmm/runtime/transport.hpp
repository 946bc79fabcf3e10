#pragma once

// Ordered, reliable, typed channels between one coordinator and n agents.

#include "wcadmm/runtime/messages.hpp"

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>

namespace wcadmm::runtime {

/// An agent's end: receives coordinator messages, sends its own.
class AgentLink {
 public:
  virtual ~AgentLink() = default;
  /// Blocks; throws RuntimeFault once the link is closed.
  virtual CoordinatorMessage receive() = 0;
  virtual void send(const AgentMessage& m) = 0;
};

class CoordinatorLink {
 public:
  virtual ~CoordinatorLink() = default;
  /// Broadcast and Halt go to `agent`; use kAllAgents for everyone.
  virtual void send(std::uint32_t agent, const CoordinatorMessage& m) = 0;
  /// Next message from any agent, or nullopt after `timeout`.
  virtual std::optional<AgentMessage> receive(std::chrono::milliseconds timeout) = 0;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::size_t agents() const = 0;
  /// Agent links are created before the coordinator link.
  virtual std::unique_ptr<AgentLink> agent_link(std::uint32_t id) = 0;
  virtual std::unique_ptr<CoordinatorLink> coordinator_link() = 0;
};

struct InprocOptions {
  /// Seed of the per-agent random send delays; 0 disables them.
  std::uint64_t jitter_seed = 0;
  std::chrono::microseconds max_jitter{200};
};

std::unique_ptr<Transport> make_inproc_transport(std::size_t agents,
                                                 const InprocOptions& options = {});

/// Loopback TCP on an ephemeral port, frames per the wire format.
std::unique_ptr<Transport> make_socket_transport(std::size_t agents);

}  // namespace wcadmm::runtime
