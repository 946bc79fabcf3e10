#pragma once

// Result files. Every CSV has a header row and prints doubles with 17
// significant digits, so re-reading them recovers the exact values.

#include "wcadmm/config.hpp"
#include "wcadmm/consensus.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace wcadmm {

/// %.17g
std::string format_double(double x);

/// Solve mode: zeta.csv, mu_agent_<i>.csv (i from 1), residuals.csv and
/// run.json; inner_trace.csv as well when `trace_inner` is set. Returns the
/// paths written.
std::vector<std::filesystem::path> emit_results(const std::filesystem::path& dir,
                                                const RunConfig& config,
                                                const SupportSet& support,
                                                const SolveResult& result,
                                                bool trace_inner = false);

/// Flow mode: zeta.csv (final measure), trajectory.csv (one row per step)
/// and run.json.
std::vector<std::filesystem::path> emit_flow_results(const std::filesystem::path& dir,
                                                     const RunConfig& config,
                                                     const SupportSet& support,
                                                     const FlowResult& result);

/// Reads the weight column (the last one) of a zeta.csv or mu_agent_<i>.csv.
Vector read_weights_csv(const std::filesystem::path& path);

}  // namespace wcadmm
