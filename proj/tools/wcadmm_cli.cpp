// wcadmm: solve, flow and validate subcommands over a YAML run configuration.
//
// Exit codes: 0 converged (or flow finished), 1 I/O failure, 2 iteration cap,
// 3 configuration error, 4 numeric or runtime error.

#include "wcadmm/config.hpp"
#include "wcadmm/consensus.hpp"
#include "wcadmm/errors.hpp"
#include "wcadmm/results.hpp"
#include "wcadmm/runtime/coordinator.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace wcadmm;

enum Exit { kOk = 0, kIo = 1, kCap = 2, kConfig = 3, kNumeric = 4 };

struct Setup {
  RunConfig config;
  Problem problem;
  ConsensusParams params;
};

/// Everything that can fail before a solver starts is a configuration error.
Setup prepare(const std::string& path, const std::optional<std::string>& output) {
  RunConfig config = load_config(path);
  if (output) config.output = std::filesystem::absolute(*output).lexically_normal();
  Problem problem = build_problem(config);
  ConsensusParams params = build_params(config);
  validate(params);
  return Setup{std::move(config), std::move(problem), std::move(params)};
}

int report(const char* stage, const std::exception& e, int code) {
  std::cerr << "wcadmm " << stage << ": " << e.what() << "\n";
  return code;
}

template <class Fn>
int guarded_prepare(Fn&& fn) {
  try {
    return fn();
  } catch (const IoError& e) {
    return report("error", e, kIo);
  } catch (const Error& e) {
    return report("config error", e, kConfig);
  }
}

template <class Fn>
int guarded_run(Fn&& fn) {
  try {
    return fn();
  } catch (const IoError& e) {
    return report("error", e, kIo);
  } catch (const IterationLimitError& e) {
    return report("iteration cap", e, kCap);
  } catch (const ConfigError& e) {
    return report("config error", e, kConfig);
  } catch (const ParameterError& e) {
    return report("config error", e, kConfig);
  } catch (const UnsupportedError& e) {
    return report("config error", e, kConfig);
  } catch (const Error& e) {
    return report("numeric error", e, kNumeric);
  }
}

int run_solve_command(const std::string& path, const std::optional<std::string>& output,
                      const std::optional<std::string>& transport, bool trace_inner) {
  std::optional<Setup> setup;
  if (int rc = guarded_prepare([&] {
        setup.emplace(prepare(path, output));
        if (transport)
          setup->config.transport =
              *transport == "socket" ? TransportChoice::socket : TransportChoice::inproc;
        if (setup->config.mode != RunMode::solve)
          throw ConfigError("configuration mode is 'flow'; use the flow subcommand");
        return 0;
      }))
    return rc;

  return guarded_run([&] {
    const RunConfig& c = setup->config;
    SolveResult result;
    if (c.adapt_alpha) {
      result = run_solve(setup->problem, setup->params);
    } else {
      runtime::DistributedOptions opts;
      opts.transport = c.transport == TransportChoice::socket ? runtime::TransportKind::socket
                                                              : runtime::TransportKind::inproc;
      opts.inproc.jitter_seed = c.seed;
      result = runtime::run_distributed(setup->problem, setup->params, opts);
    }
    emit_results(c.output, c, setup->problem.support, result, trace_inner);
    if (result.converged) {
      std::printf("converged after %d iterations; results in %s\n", result.state.k,
                  c.output.string().c_str());
      return int(kOk);
    }
    std::printf("iteration cap reached after %d iterations; results in %s\n", result.state.k,
                c.output.string().c_str());
    return int(kCap);
  });
}

int run_flow_command(const std::string& path, const std::optional<std::string>& output,
                     std::optional<int> steps) {
  std::optional<Setup> setup;
  if (int rc = guarded_prepare([&] {
        setup.emplace(prepare(path, output));
        if (setup->config.mode != RunMode::flow)
          throw ConfigError("configuration mode is 'solve'; use the solve subcommand");
        if (!steps) steps = setup->config.steps;
        if (!steps) throw ConfigError("flow needs --steps or a 'steps' key");
        if (*steps < 0) throw ConfigError("steps must be nonnegative");
        setup->config.steps = steps;
        return 0;
      }))
    return rc;

  return guarded_run([&] {
    const RunConfig& c = setup->config;
    const FlowResult result = run_flow(setup->problem, setup->params, *steps);
    emit_flow_results(c.output, c, setup->problem.support, result);
    std::printf("%d steps of length %s; results in %s\n", *steps,
                format_double(result.time_step).c_str(), c.output.string().c_str());
    return int(kOk);
  });
}

int run_validate_command(const std::string& path) {
  return guarded_prepare([&] {
    const Setup s = prepare(path, std::nullopt);
    std::printf("ok: %s mode, %zu agent(s), %d support points in %d dimension(s)\n",
                to_string(s.config.mode), s.problem.agents(), s.problem.size(),
                s.problem.support.dim());
    return int(kOk);
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wasserstein consensus ADMM"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::string> output;
  std::optional<std::string> transport;
  bool trace_inner = false;
  std::optional<int> steps;

  auto* solve = app.add_subcommand("solve", "run consensus ADMM to a fixed point");
  solve->add_option("--config", config, "YAML run configuration")->required();
  solve->add_option("--output", output, "output directory (overrides the configuration)");
  solve->add_option("--transport", transport, "agent transport")
      ->check(CLI::IsMember({"inproc", "socket"}));
  solve->add_flag("--trace-inner", trace_inner, "also write inner_trace.csv");

  auto* flow = app.add_subcommand("flow", "run proximal steps of the single-agent flow");
  flow->add_option("--config", config, "YAML run configuration")->required();
  flow->add_option("--output", output, "output directory (overrides the configuration)");
  flow->add_option("--steps", steps, "number of steps");

  auto* check = app.add_subcommand("validate", "parse and check a configuration");
  check->add_option("--config", config, "YAML run configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfig;
  }

  if (*solve) return run_solve_command(config, output, transport, trace_inner);
  if (*flow) return run_flow_command(config, output, steps);
  return run_validate_command(config);
}
