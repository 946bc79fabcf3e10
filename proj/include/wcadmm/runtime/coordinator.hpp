#pragma once

// Coordinator side of the distributed outer loop. One round_trip performs the
// same arithmetic as consensus::outer_step, with the mu-updates and the agent
// halves of the inner rounds done by the agents.

#include "wcadmm/consensus.hpp"
#include "wcadmm/runtime/agent.hpp"
#include "wcadmm/runtime/transport.hpp"

#include <chrono>
#include <memory>
#include <thread>
#include <vector>

namespace wcadmm::runtime {

struct MessageCounts {
  std::size_t mu_updates = 0;
  std::size_t dual_gradients = 0;
  std::size_t inner_targets = 0;
  /// A broadcast to all agents counts once.
  std::size_t broadcasts = 0;

  std::size_t total() const { return mu_updates + dual_gradients + inner_targets + broadcasts; }
};

struct PoolOptions {
  std::chrono::milliseconds timeout{60000};
};

/// n agent workers plus the coordinator's link to them. The pool starts by
/// broadcasting zeta^0; halting (explicitly or on destruction) stops and
/// joins every agent.
class AgentPool {
 public:
  AgentPool(const Problem& prob, const ConsensusParams& params, std::unique_ptr<Transport> transport,
            const PoolOptions& options = {});
  /// Agent setups are given explicitly; fault-injection tests use this.
  AgentPool(std::vector<AgentSetup> setups, const ProbabilityVector& zeta0,
            std::unique_ptr<Transport> transport, const PoolOptions& options = {});
  ~AgentPool();
  AgentPool(const AgentPool&) = delete;
  AgentPool& operator=(const AgentPool&) = delete;

  std::size_t size() const { return workers_.size(); }
  bool halted() const { return halted_; }
  void halt(const std::string& reason);

  CoordinatorLink& link() { return *link_; }
  const PoolOptions& options() const { return options_; }
  MessageCounts& counts() { return counts_; }
  const MessageCounts& counts() const { return counts_; }

 private:
  void start(std::vector<AgentSetup> setups, const ProbabilityVector& zeta0);

  std::unique_ptr<Transport> transport_;
  std::unique_ptr<CoordinatorLink> link_;
  std::vector<std::jthread> workers_;
  PoolOptions options_;
  MessageCounts counts_;
  bool halted_ = false;
};

/// Problem and parameters as seen by a given agent.
AgentSetup make_agent_setup(const Problem& prob, const ConsensusParams& params, std::uint32_t id);

/// One outer iteration through messages. Expects Broadcast(state.zeta,
/// state.k) to have been sent and ends by broadcasting the new zeta. A Fault
/// halts the pool and raises AgentError; so does a timeout, naming the
/// silent agent.
ConsensusState round_trip(AgentPool& pool, const ConsensusState& state, const Problem& prob,
                          const ConsensusParams& params);

enum class TransportKind { inproc, socket };

struct DistributedOptions {
  TransportKind transport = TransportKind::inproc;
  InprocOptions inproc;
  PoolOptions pool;
};

/// run_solve through an agent pool. Alpha adaptation is refused.
SolveResult run_distributed(const Problem& prob, const ConsensusParams& params,
                            const DistributedOptions& options = {}, const TraceSink& sink = {});

}  // namespace wcadmm::runtime
