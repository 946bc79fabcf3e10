#include "channel.hpp"
#include "wcadmm/errors.hpp"
#include "wcadmm/runtime/transport.hpp"

#include <random>
#include <thread>
#include <vector>

namespace wcadmm::runtime {

namespace {

struct Shared {
  explicit Shared(std::size_t n) : to_agents(n) {}
  detail::Channel<AgentMessage> to_coordinator;
  std::vector<detail::Channel<CoordinatorMessage>> to_agents;
};

class InprocAgentLink final : public AgentLink {
 public:
  InprocAgentLink(std::shared_ptr<Shared> shared, std::uint32_t id, const InprocOptions& o)
      : shared_(std::move(shared)), id_(id), options_(o), rng_(o.jitter_seed * 7919 + id) {}

  CoordinatorMessage receive() override {
    auto m = shared_->to_agents[id_].pop();
    if (!m) throw RuntimeFault("in-process link to agent " + std::to_string(id_) + " closed");
    return std::move(*m);
  }

  void send(const AgentMessage& m) override {
    if (options_.jitter_seed != 0 && options_.max_jitter.count() > 0) {
      std::uniform_int_distribution<long> d(0, options_.max_jitter.count());
      std::this_thread::sleep_for(std::chrono::microseconds(d(rng_)));
    }
    shared_->to_coordinator.push(m);
  }

 private:
  std::shared_ptr<Shared> shared_;
  std::uint32_t id_;
  InprocOptions options_;
  std::mt19937_64 rng_;
};

class InprocCoordinatorLink final : public CoordinatorLink {
 public:
  explicit InprocCoordinatorLink(std::shared_ptr<Shared> shared) : shared_(std::move(shared)) {}
  ~InprocCoordinatorLink() override {
    for (auto& c : shared_->to_agents) c.close();
    shared_->to_coordinator.close();
  }

  void send(std::uint32_t agent, const CoordinatorMessage& m) override {
    if (agent == kAllAgents) {
      for (auto& c : shared_->to_agents) c.push(m);
    } else {
      shared_->to_agents.at(agent).push(m);
    }
  }

  std::optional<AgentMessage> receive(std::chrono::milliseconds timeout) override {
    return shared_->to_coordinator.pop_for(timeout);
  }

 private:
  std::shared_ptr<Shared> shared_;
};

class InprocTransport final : public Transport {
 public:
  InprocTransport(std::size_t n, const InprocOptions& o)
      : shared_(std::make_shared<Shared>(n)), options_(o) {}
  std::size_t agents() const override { return shared_->to_agents.size(); }
  std::unique_ptr<AgentLink> agent_link(std::uint32_t id) override {
    if (id >= agents()) throw RuntimeFault("no agent " + std::to_string(id));
    return std::make_unique<InprocAgentLink>(shared_, id, options_);
  }
  std::unique_ptr<CoordinatorLink> coordinator_link() override {
    return std::make_unique<InprocCoordinatorLink>(shared_);
  }

 private:
  std::shared_ptr<Shared> shared_;
  InprocOptions options_;
};

}  // namespace

std::unique_ptr<Transport> make_inproc_transport(std::size_t agents, const InprocOptions& options) {
  return std::make_unique<InprocTransport>(agents, options);
}

}  // namespace wcadmm::runtime
