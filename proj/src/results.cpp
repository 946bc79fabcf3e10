#include "wcadmm/results.hpp"

#include "wcadmm/errors.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace wcadmm {

namespace {

namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

std::string coordinate_header(int dim) {
  if (dim == 1) return "x";
  std::string h;
  for (int d = 1; d <= dim; ++d) h += (d > 1 ? ",x" : "x") + std::to_string(d);
  return h;
}

std::string measure_csv(const SupportSet& support, const Vector& w) {
  std::string out = coordinate_header(support.dim()) + ",weight\n";
  const Matrix& pts = support.points();
  for (int i = 0; i < support.size(); ++i) {
    for (int d = 0; d < support.dim(); ++d) out += format_double(pts(i, d)) + ",";
    out += format_double(w[i]) + "\n";
  }
  return out;
}

std::string residuals_csv(const std::vector<TraceRecord>& trace, std::size_t agents) {
  std::string out = "k";
  for (std::size_t i = 1; i <= agents; ++i) out += ",r_" + std::to_string(i);
  out += ",s,wall_ms\n";
  for (const auto& t : trace) {
    out += std::to_string(t.k);
    for (double r : t.primal) out += "," + format_double(r);
    out += "," + format_double(t.dual) + "," + format_double(t.wall_ms) + "\n";
  }
  return out;
}

std::string inner_trace_csv(const std::vector<TraceRecord>& trace) {
  std::string out = "k,inner,primal,dual,rho\n";
  for (const auto& t : trace)
    for (const auto& e : t.inner_trace)
      out += std::to_string(t.k) + "," + std::to_string(e.iteration) + "," +
             format_double(e.primal) + "," + format_double(e.dual) + "," +
             format_double(e.rho) + "\n";
  return out;
}

nlohmann::ordered_json run_header(const RunConfig& config) {
  nlohmann::ordered_json j;
  j["config"] = nlohmann::ordered_json::parse(echo_config(config));
  return j;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<fs::path> emit_results(const fs::path& dir, const RunConfig& config,
                                   const SupportSet& support, const SolveResult& result,
                                   bool trace_inner) {
  prepare_dir(dir);
  const ConsensusState& s = result.state;
  std::vector<fs::path> written;
  const auto emit = [&](const std::string& name, const std::string& text) {
    write_file(dir / name, text);
    written.push_back(dir / name);
  };

  emit("zeta.csv", measure_csv(support, s.zeta.weights()));
  for (std::size_t i = 0; i < s.mus.size(); ++i)
    emit("mu_agent_" + std::to_string(i + 1) + ".csv", measure_csv(support, s.mus[i].weights()));
  emit("residuals.csv", residuals_csv(result.trace, s.mus.size()));
  if (trace_inner) emit("inner_trace.csv", inner_trace_csv(result.trace));

  auto j = run_header(config);
  j["converged"] = result.converged;
  j["iterations"] = s.k;
  j["alpha"] = s.alpha;
  j["primal_residuals"] = s.primal_residuals;
  j["dual_residual"] = s.dual_residual;
  emit("run.json", j.dump(2) + "\n");
  return written;
}

std::vector<fs::path> emit_flow_results(const fs::path& dir, const RunConfig& config,
                                        const SupportSet& support, const FlowResult& result) {
  prepare_dir(dir);
  std::vector<fs::path> written;
  const auto emit = [&](const std::string& name, const std::string& text) {
    write_file(dir / name, text);
    written.push_back(dir / name);
  };
  emit("zeta.csv", measure_csv(support, result.trajectory.back().weights()));

  std::string traj = "step,t";
  for (int i = 1; i <= support.size(); ++i) traj += ",w_" + std::to_string(i);
  traj += "\n";
  for (std::size_t k = 0; k < result.trajectory.size(); ++k) {
    traj += std::to_string(k) + "," + format_double(static_cast<double>(k) * result.time_step);
    const Vector& w = result.trajectory[k].weights();
    for (int i = 0; i < w.size(); ++i) traj += "," + format_double(w[i]);
    traj += "\n";
  }
  emit("trajectory.csv", traj);

  auto j = run_header(config);
  j["converged"] = true;
  j["iterations"] = result.trajectory.size() - 1;
  j["time_step"] = result.time_step;
  emit("run.json", j.dump(2) + "\n");
  return written;
}

Vector read_weights_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<double> w;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    try {
      w.push_back(std::stod(line.substr(comma == std::string::npos ? 0 : comma + 1)));
    } catch (const std::exception&) {
      throw IoError(path.string() + ": malformed row '" + line + "'");
    }
  }
  return Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
}

}  // namespace wcadmm
