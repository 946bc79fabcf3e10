#pragma once

// Run configuration: YAML in, validated RunConfig out, and a JSON echo that
// parses back to the same RunConfig.

#include "wcadmm/consensus.hpp"
#include "wcadmm/measures.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace wcadmm {

enum class RunMode { solve, flow };
enum class TransportChoice { inproc, socket };

struct CsvSupport {
  std::filesystem::path path;
  friend bool operator==(const CsvSupport&, const CsvSupport&) = default;
};
using SupportConfig = std::variant<GridSpec, CsvSupport>;

/// Exactly one source: a builtin evaluated on the support, literal values,
/// or a CSV column aligned with the support rows.
///   quadratic:   scale |x|^2 / 2
///   double_well: scale (|x|^2 - well)^2 / 4
struct PotentialConfig {
  std::string builtin;
  double scale = 1.0;
  double well = 1.0;
  std::vector<double> values;
  std::filesystem::path csv;
  /// -1 selects the last column.
  int column = -1;
  friend bool operator==(const PotentialConfig&, const PotentialConfig&) = default;
};

/// identity: scale I; gaussian: scale exp(-|x_i - x_j|^2 / (2 width^2));
/// csv: an N x N matrix.
struct InteractionConfig {
  std::string kind;
  double scale = 1.0;
  double width = 1.0;
  std::filesystem::path csv;
  friend bool operator==(const InteractionConfig&, const InteractionConfig&) = default;
};

struct AgentConfig {
  std::optional<PotentialConfig> potential;
  std::optional<double> beta;
  std::optional<InteractionConfig> interaction;
  friend bool operator==(const AgentConfig&, const AgentConfig&) = default;
};

/// uniform, gaussian (mean per axis, isotropic variance), values, or csv.
struct InitialConfig {
  std::string kind = "uniform";
  std::vector<double> mean;
  double variance = 1.0;
  std::vector<double> values;
  std::filesystem::path csv;
  friend bool operator==(const InitialConfig&, const InitialConfig&) = default;
};

struct ToleranceConfig {
  double primal = 1e-6;
  double dual = 1e-6;
  double inner = 1e-8;
  double subproblem = 1e-8;
  double prox = 1e-10;
  double simplex = kDefaultSimplexTol;
  double gradient_agreement = 1e-6;
  friend bool operator==(const ToleranceConfig&, const ToleranceConfig&) = default;
};

struct CapConfig {
  int outer = 1000;
  int inner = 20000;
  int subproblem = 200;
  int prox = 200000;
  friend bool operator==(const CapConfig&, const CapConfig&) = default;
};

struct RunConfig {
  RunMode mode = RunMode::solve;
  double alpha = 1.0;
  double epsilon = 0.1;
  SupportConfig support = GridSpec{};
  std::vector<AgentConfig> agents;
  InitialConfig initial;
  ToleranceConfig tolerances;
  CapConfig caps;
  double rho = 1.0;
  bool adapt_rho = true;
  bool adapt_alpha = false;
  bool allow_zeros = false;
  double stabilize_ratio = kDefaultStabilizeRatio;
  std::optional<int> steps;
  std::filesystem::path output = "out";
  std::uint64_t seed = 0;
  bool deterministic = false;
  TransportChoice transport = TransportChoice::inproc;
  int threads = 1;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Strict parse: unknown keys, wrong types and out-of-range values raise
/// ConfigError naming the key and its line. Relative paths are resolved
/// against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// JSON text of every field (paths absolute); parse_config reads it back.
std::string echo_config(const RunConfig& config);

SupportSet build_support(const RunConfig& config);
Problem build_problem(const RunConfig& config);
ConsensusParams build_params(const RunConfig& config);

const char* to_string(RunMode mode);
const char* to_string(TransportChoice transport);

}  // namespace wcadmm
