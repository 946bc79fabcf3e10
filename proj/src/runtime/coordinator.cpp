#include "wcadmm/runtime/coordinator.hpp"

#include "wcadmm/errors.hpp"
#include "wcadmm/runtime/agent.hpp"

#include <chrono>
#include <sstream>

namespace wcadmm::runtime {

namespace {

const char* kind_name(const AgentMessage& m) {
  switch (m.index()) {
    case 0:
      return "MuUpdate";
    case 1:
      return "DualGradient";
    default:
      return "Fault";
  }
}

// Waits for one message of type Msg from every agent for `round`.
template <typename Msg, typename OnMessage>
void collect(AgentPool& pool, std::uint64_t round, OnMessage&& on) {
  using clock = std::chrono::steady_clock;
  const std::size_t n = pool.size();
  const auto deadline = clock::now() + pool.options().timeout;
  std::vector<bool> got(n, false);
  std::size_t have = 0;
  const char* expected = std::is_same_v<Msg, MuUpdate> ? "MuUpdate" : "DualGradient";
  while (have < n) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
    auto m = pool.link().receive(std::max(left, std::chrono::milliseconds(0)));
    if (!m) {
      std::ostringstream missing;
      std::size_t first = n;
      for (std::size_t i = 0; i < n; ++i)
        if (!got[i]) {
          if (first == n) first = i;
          missing << (first == i ? "" : ", ") << i;
        }
      pool.halt("timeout");
      throw AgentError(first, "round " + std::to_string(round) + ": timed out waiting for " +
                                  expected + " (silent agents: " + missing.str() + ")");
    }
    if (auto* f = std::get_if<Fault>(&*m)) {
      const std::size_t who = f->agent_id;
      const std::string what = f->error;
      pool.halt("agent fault");
      throw AgentError(who, what);
    }
    const std::uint32_t id = sender(*m);
    auto* msg = std::get_if<Msg>(&*m);
    if (!msg || id >= n || got[id] || msg->round != round) {
      pool.halt("protocol violation");
      throw RuntimeFault("round " + std::to_string(round) + ": unexpected " + kind_name(*m) +
                         " from agent " + std::to_string(id));
    }
    got[id] = true;
    ++have;
    on(std::move(*msg));
  }
}

}  // namespace

AgentSetup make_agent_setup(const Problem& prob, const ConsensusParams& params, std::uint32_t id) {
  return AgentSetup{id, prob.specs.at(id), prox_params(prob, params, params.alpha),
                    inner_options(params),
                    prob.initial ? *prob.initial : ProbabilityVector::uniform(prob.size())};
}

AgentPool::AgentPool(const Problem& prob, const ConsensusParams& params,
                     std::unique_ptr<Transport> transport, const PoolOptions& options)
    : transport_(std::move(transport)), options_(options) {
  std::vector<AgentSetup> setups;
  for (std::uint32_t i = 0; i < prob.agents(); ++i)
    setups.push_back(make_agent_setup(prob, params, i));
  start(std::move(setups), prob.initial ? *prob.initial : ProbabilityVector::uniform(prob.size()));
}

AgentPool::AgentPool(std::vector<AgentSetup> setups, const ProbabilityVector& zeta0,
                     std::unique_ptr<Transport> transport, const PoolOptions& options)
    : transport_(std::move(transport)), options_(options) {
  start(std::move(setups), zeta0);
}

void AgentPool::start(std::vector<AgentSetup> setups, const ProbabilityVector& zeta0) {
  if (setups.empty()) throw ValidationError("agent pool needs at least one agent");
  if (transport_->agents() != setups.size())
    throw RuntimeFault("transport sized for " + std::to_string(transport_->agents()) +
                       " agents, pool has " + std::to_string(setups.size()));
  std::vector<std::unique_ptr<AgentLink>> links;
  for (std::uint32_t i = 0; i < setups.size(); ++i) links.push_back(transport_->agent_link(i));
  link_ = transport_->coordinator_link();
  for (std::size_t i = 0; i < setups.size(); ++i)
    workers_.emplace_back([setup = std::move(setups[i]), l = std::move(links[i])]() mutable {
      run_agent(std::move(setup), *l);
    });
  link_->send(kAllAgents, Broadcast{0, zeta0.weights()});
  ++counts_.broadcasts;
}

void AgentPool::halt(const std::string& reason) {
  if (halted_) return;
  halted_ = true;
  try {
    link_->send(kAllAgents, Halt{reason});
  } catch (const std::exception&) {
    link_.reset();  // closing the link unblocks every agent
  }
  for (auto& w : workers_)
    if (w.joinable()) w.join();
}

AgentPool::~AgentPool() {
  try {
    halt("pool destroyed");
  } catch (...) {
  }
}

ConsensusState round_trip(AgentPool& pool, const ConsensusState& state, const Problem& prob,
                          const ConsensusParams& params) {
  if (pool.halted()) throw RuntimeFault("agent pool has been halted");
  const std::size_t n = pool.size();
  if (state.mus.size() != n) throw ValidationError("state does not match the agent pool");
  const auto round = static_cast<std::uint64_t>(state.k);

  ConsensusState next;
  std::vector<Vector> mus(n);
  collect<MuUpdate>(pool, round, [&](MuUpdate&& m) { mus[m.agent_id] = std::move(m.mu); });
  pool.counts().mu_updates += n;
  for (auto& m : mus) next.mus.push_back(validate_simplex(m, params.simplex_tol));

  const InnerOptions inner = inner_options(params);
  BarycenterProblem bp{next.mus, state.nu_sum, state.alpha, prob.kernel};
  try {
    if (n == 1) {
      auto z = solve_zeta_update(bp, inner);
      next.zeta = std::move(z.zeta);
      next.inner_warm = std::move(z.state);
      next.last_inner = std::move(z.diagnostics);
    } else {
      validate(bp);
      const Vector b = coupling_rhs(bp);
      InnerDualState s =
          initial_inner_state(bp, inner, state.inner_warm ? &*state.inner_warm : nullptr);
      BarycenterDiagnostics diag;
      while (true) {
        const auto targets = inner_targets(s);
        for (std::uint32_t i = 0; i < n; ++i)
          pool.link().send(i, InnerTarget{i, round, targets[i], s.rho});
        pool.counts().inner_targets += n;
        std::vector<Vector> us(n), grads(n);
        collect<DualGradient>(pool, round, [&](DualGradient&& g) {
          us[g.agent_id] = std::move(g.u);
          grads[g.agent_id] = std::move(g.grad);
        });
        pool.counts().dual_gradients += n;
        s = absorb_agent_updates(s, std::move(us), std::move(grads), b, inner);
        diag.trace.push_back({s.iteration, s.primal_residual, s.dual_residual, s.rho});
        if (inner_converged(s, inner)) break;
        if (s.iteration >= inner.max_iter)
          throw IterationLimitError("inner ADMM hit its cap; primal " +
                                        std::to_string(s.primal_residual) + ", dual " +
                                        std::to_string(s.dual_residual),
                                    std::max(s.primal_residual, s.dual_residual), s.iteration);
      }
      next.zeta = finish_zeta_update(s, b, inner, diag);
      next.inner_warm = std::move(s);
      next.last_inner = std::move(diag);
    }
  } catch (const Error&) {
    pool.halt("zeta-update failed");
    throw;
  }

  complete_outer_step(next, state, params);
  pool.link().send(kAllAgents, Broadcast{static_cast<std::uint64_t>(next.k), next.zeta.weights()});
  ++pool.counts().broadcasts;
  return next;
}

SolveResult run_distributed(const Problem& prob, const ConsensusParams& params,
                            const DistributedOptions& options, const TraceSink& sink) {
  validate(params);
  if (params.adapt_alpha)
    throw UnsupportedError("alpha adaptation is not available in the distributed runtime");
  auto transport = options.transport == TransportKind::socket
                       ? make_socket_transport(prob.agents())
                       : make_inproc_transport(prob.agents(), options.inproc);
  AgentPool pool(prob, params, std::move(transport), options.pool);

  SolveResult out{initial_state(prob, params), {}, false};
  using clock = std::chrono::steady_clock;
  while (out.state.k < params.max_outer) {
    const auto t0 = clock::now();
    out.state = round_trip(pool, out.state, prob, params);
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
  pool.halt("run finished");
  return out;
}

}  // namespace wcadmm::runtime
