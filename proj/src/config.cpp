#include "wcadmm/config.hpp"

#include "wcadmm/errors.hpp"

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace wcadmm {

namespace {

namespace fs = std::filesystem;

std::string where(const YAML::Node& n) { return "line " + std::to_string(n.Mark().line + 1); }

[[noreturn]] void fail(const YAML::Node& n, const std::string& msg) {
  throw ConfigError(where(n) + ": " + msg);
}

/// A YAML mapping whose keys must all be consumed.
class Section {
 public:
  Section(const YAML::Node& node, std::string name) : node_(node), name_(std::move(name)) {
    if (!node_.IsMap()) fail(node_, "'" + name_ + "' must be a mapping");
  }

  YAML::Node take(const std::string& key) {
    used_.insert(key);
    const YAML::Node& n = node_;
    return n[key];
  }

  bool has(const std::string& key) const {
    const YAML::Node& n = node_;
    return static_cast<bool>(n[key]);
  }

  void finish() const {
    for (auto it = node_.begin(); it != node_.end(); ++it) {
      const auto key = it->first.as<std::string>();
      if (!used_.count(key)) fail(it->first, "unknown key '" + key + "' in " + name_);
    }
  }

  const YAML::Node& node() const { return node_; }

 private:
  YAML::Node node_;
  std::string name_;
  std::set<std::string> used_;
};

double to_double(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) fail(n, "'" + key + "' must be a number");
  double v;
  try {
    v = n.as<double>();
  } catch (const YAML::Exception&) {
    fail(n, "'" + key + "' must be a number");
  }
  if (!std::isfinite(v)) fail(n, "'" + key + "' must be finite");
  return v;
}

template <class Int>
Int to_int(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) fail(n, "'" + key + "' must be an integer");
  try {
    return n.as<Int>();
  } catch (const YAML::Exception&) {
    fail(n, "'" + key + "' must be an integer");
  }
}

bool to_bool(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) fail(n, "'" + key + "' must be true or false");
  try {
    return n.as<bool>();
  } catch (const YAML::Exception&) {
    fail(n, "'" + key + "' must be true or false");
  }
}

std::string to_string(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) fail(n, "'" + key + "' must be a string");
  return n.as<std::string>();
}

std::vector<double> to_doubles(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence()) fail(n, "'" + key + "' must be a list of numbers");
  std::vector<double> out;
  for (const auto& x : n) out.push_back(to_double(x, key));
  return out;
}

fs::path to_path(const YAML::Node& n, const std::string& key, const fs::path& base) {
  const fs::path p = to_string(n, key);
  if (p.empty()) fail(n, "'" + key + "' must not be empty");
  return (p.is_absolute() ? p : fs::absolute(base / p)).lexically_normal();
}

void read(Section& s, const std::string& key, double& out) {
  if (auto n = s.take(key)) out = to_double(n, key);
}
void read(Section& s, const std::string& key, int& out) {
  if (auto n = s.take(key)) out = to_int<int>(n, key);
}
void read(Section& s, const std::string& key, bool& out) {
  if (auto n = s.take(key)) out = to_bool(n, key);
}

void require_positive(Section& s, const std::string& key, double value, const std::string& label) {
  if (!(value > 0.0)) fail(s.has(key) ? s.node()[key] : s.node(), label + " must be positive");
}
void require_at_least_one(Section& s, const std::string& key, int value, const std::string& label) {
  if (value < 1) fail(s.has(key) ? s.node()[key] : s.node(), label + " must be at least 1");
}

SupportConfig parse_support(const YAML::Node& node, const fs::path& base) {
  Section s(node, "support");
  SupportConfig out;
  if (s.has("grid") == s.has("csv")) fail(node, "support needs exactly one of 'grid' or 'csv'");
  if (auto g = s.take("grid")) {
    Section gs(g, "support.grid");
    GridSpec spec;
    read(gs, "dim", spec.dim);
    read(gs, "min", spec.min);
    read(gs, "max", spec.max);
    read(gs, "count", spec.count);
    require_at_least_one(gs, "dim", spec.dim, "grid dim");
    require_at_least_one(gs, "count", spec.count, "grid count");
    if (!(spec.min < spec.max)) fail(g, "grid min must be below max");
    gs.finish();
    out = spec;
  }
  if (auto c = s.take("csv")) out = CsvSupport{to_path(c, "csv", base)};
  s.finish();
  return out;
}

PotentialConfig parse_potential(const YAML::Node& node, const fs::path& base) {
  Section s(node, "potential");
  PotentialConfig p;
  const int sources = int(s.has("builtin")) + int(s.has("values")) + int(s.has("csv"));
  if (sources != 1) fail(node, "potential needs exactly one of 'builtin', 'values' or 'csv'");
  if (auto b = s.take("builtin")) {
    p.builtin = to_string(b, "builtin");
    if (p.builtin != "quadratic" && p.builtin != "double_well")
      fail(b, "unknown builtin potential '" + p.builtin + "' (quadratic, double_well)");
    read(s, "scale", p.scale);
    if (p.builtin == "double_well") read(s, "well", p.well);
  }
  if (auto v = s.take("values")) p.values = to_doubles(v, "values");
  if (auto c = s.take("csv")) {
    p.csv = to_path(c, "csv", base);
    read(s, "column", p.column);
    if (p.column < -1) fail(s.node()["column"], "column must be -1 (last) or a column index");
  }
  s.finish();
  return p;
}

InteractionConfig parse_interaction(const YAML::Node& node, const fs::path& base) {
  Section s(node, "interaction");
  InteractionConfig u;
  auto k = s.take("kind");
  if (!k) fail(node, "interaction needs a 'kind' (identity, gaussian, csv)");
  u.kind = to_string(k, "kind");
  if (u.kind == "identity" || u.kind == "gaussian") {
    read(s, "scale", u.scale);
    require_positive(s, "scale", u.scale, "interaction scale");
    if (u.kind == "gaussian") {
      read(s, "width", u.width);
      require_positive(s, "width", u.width, "interaction width");
    }
  } else if (u.kind == "csv") {
    auto p = s.take("path");
    if (!p) fail(node, "csv interaction needs a 'path'");
    u.csv = to_path(p, "path", base);
  } else {
    fail(k, "unknown interaction kind '" + u.kind + "' (identity, gaussian, csv)");
  }
  s.finish();
  return u;
}

AgentConfig parse_agent(const YAML::Node& node, const fs::path& base) {
  Section s(node, "agent");
  AgentConfig a;
  if (auto p = s.take("potential")) a.potential = parse_potential(p, base);
  if (auto b = s.take("beta")) {
    a.beta = to_double(b, "beta");
    if (!(*a.beta > 0.0)) fail(b, "beta must be positive");
  }
  if (auto u = s.take("interaction")) a.interaction = parse_interaction(u, base);
  if (!a.potential && !a.beta && !a.interaction)
    fail(node, "agent needs at least one of 'potential', 'beta' or 'interaction'");
  s.finish();
  return a;
}

InitialConfig parse_initial(const YAML::Node& node, const fs::path& base) {
  InitialConfig init;
  if (node.IsScalar()) {
    init.kind = to_string(node, "initial");
    if (init.kind != "uniform") fail(node, "only 'uniform' may be given without parameters");
    return init;
  }
  Section s(node, "initial");
  auto k = s.take("kind");
  if (!k) fail(node, "initial needs a 'kind' (uniform, gaussian, values, csv)");
  init.kind = to_string(k, "kind");
  if (init.kind == "gaussian") {
    if (auto m = s.take("mean")) init.mean = to_doubles(m, "mean");
    read(s, "variance", init.variance);
    require_positive(s, "variance", init.variance, "initial variance");
  } else if (init.kind == "values") {
    auto v = s.take("values");
    if (!v) fail(node, "initial kind 'values' needs 'values'");
    init.values = to_doubles(v, "values");
  } else if (init.kind == "csv") {
    auto p = s.take("path");
    if (!p) fail(node, "initial kind 'csv' needs a 'path'");
    init.csv = to_path(p, "path", base);
  } else if (init.kind != "uniform") {
    fail(k, "unknown initial kind '" + init.kind + "' (uniform, gaussian, values, csv)");
  }
  s.finish();
  return init;
}

ToleranceConfig parse_tolerances(const YAML::Node& node) {
  Section s(node, "tolerances");
  ToleranceConfig t;
  const std::pair<const char*, double*> fields[] = {
      {"primal", &t.primal}, {"dual", &t.dual},       {"inner", &t.inner},
      {"subproblem", &t.subproblem}, {"prox", &t.prox}, {"simplex", &t.simplex},
      {"gradient_agreement", &t.gradient_agreement}};
  for (auto [key, dst] : fields) {
    read(s, key, *dst);
    require_positive(s, key, *dst, std::string("tolerance '") + key + "'");
  }
  s.finish();
  return t;
}

CapConfig parse_caps(const YAML::Node& node) {
  Section s(node, "caps");
  CapConfig c;
  const std::pair<const char*, int*> fields[] = {
      {"outer", &c.outer}, {"inner", &c.inner}, {"subproblem", &c.subproblem}, {"prox", &c.prox}};
  for (auto [key, dst] : fields) {
    read(s, key, *dst);
    require_at_least_one(s, key, *dst, std::string("cap '") + key + "'");
  }
  s.finish();
  return c;
}

RunConfig parse_root(const YAML::Node& root, const fs::path& base) {
  if (!root || root.IsNull()) throw ConfigError("configuration is empty");
  Section s(root, "configuration");
  RunConfig c;

  if (auto m = s.take("mode")) {
    const auto mode = to_string(m, "mode");
    if (mode == "solve")
      c.mode = RunMode::solve;
    else if (mode == "flow")
      c.mode = RunMode::flow;
    else
      fail(m, "mode must be 'solve' or 'flow'");
  }
  read(s, "alpha", c.alpha);
  require_positive(s, "alpha", c.alpha, "alpha");
  read(s, "epsilon", c.epsilon);
  require_positive(s, "epsilon", c.epsilon, "epsilon");

  auto sup = s.take("support");
  if (!sup) fail(root, "missing required key 'support'");
  c.support = parse_support(sup, base);

  auto agents = s.take("agents");
  if (!agents) fail(root, "missing required key 'agents'");
  if (!agents.IsSequence() || agents.size() == 0) fail(agents, "'agents' must be a non-empty list");
  for (const auto& a : agents) c.agents.push_back(parse_agent(a, base));

  if (auto i = s.take("initial")) c.initial = parse_initial(i, base);
  if (auto t = s.take("tolerances")) c.tolerances = parse_tolerances(t);
  if (auto k = s.take("caps")) c.caps = parse_caps(k);

  read(s, "rho", c.rho);
  require_positive(s, "rho", c.rho, "rho");
  read(s, "adapt_rho", c.adapt_rho);
  read(s, "adapt_alpha", c.adapt_alpha);
  read(s, "allow_zeros", c.allow_zeros);
  read(s, "stabilize_ratio", c.stabilize_ratio);
  require_positive(s, "stabilize_ratio", c.stabilize_ratio, "stabilize_ratio");
  if (auto n = s.take("steps")) {
    c.steps = to_int<int>(n, "steps");
    if (*c.steps < 0) fail(n, "steps must be nonnegative");
  }
  if (auto o = s.take("output")) c.output = to_path(o, "output", base);
  else c.output = fs::absolute(base / c.output).lexically_normal();
  if (auto n = s.take("seed")) c.seed = to_int<std::uint64_t>(n, "seed");
  read(s, "deterministic", c.deterministic);
  if (auto t = s.take("transport")) {
    const auto kind = to_string(t, "transport");
    if (kind == "inproc")
      c.transport = TransportChoice::inproc;
    else if (kind == "socket")
      c.transport = TransportChoice::socket;
    else
      fail(t, "transport must be 'inproc' or 'socket'");
  }
  read(s, "threads", c.threads);
  require_at_least_one(s, "threads", c.threads, "threads");
  s.finish();

  if (c.mode == RunMode::flow) {
    if (c.agents.size() != 1)
      fail(agents, "flow mode runs a single agent; got " + std::to_string(c.agents.size()));
    if (c.adapt_alpha) fail(s.node()["adapt_alpha"], "flow mode needs a fixed alpha (adapt_alpha)");
  }
  return c;
}

using Json = nlohmann::ordered_json;

Json potential_json(const PotentialConfig& p) {
  Json j;
  if (!p.builtin.empty()) {
    j["builtin"] = p.builtin;
    j["scale"] = p.scale;
    if (p.builtin == "double_well") j["well"] = p.well;
  } else if (!p.csv.empty()) {
    j["csv"] = p.csv.string();
    j["column"] = p.column;
  } else {
    j["values"] = p.values;
  }
  return j;
}

Json interaction_json(const InteractionConfig& u) {
  Json j{{"kind", u.kind}};
  if (u.kind == "csv") {
    j["path"] = u.csv.string();
  } else {
    j["scale"] = u.scale;
    if (u.kind == "gaussian") j["width"] = u.width;
  }
  return j;
}

Json initial_json(const InitialConfig& i) {
  Json j{{"kind", i.kind}};
  if (i.kind == "gaussian") {
    j["mean"] = i.mean;
    j["variance"] = i.variance;
  } else if (i.kind == "values") {
    j["values"] = i.values;
  } else if (i.kind == "csv") {
    j["path"] = i.csv.string();
  }
  return j;
}

/// Numeric rows of a CSV file; a non-numeric first line is a header.
std::vector<std::vector<double>> read_csv_rows(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool ok = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) ok = false;
      } catch (const std::exception&) {
        ok = false;
      }
    }
    if (!ok) {
      if (lineno == 1) continue;
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": malformed row");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector csv_column(const fs::path& path, int column, int expected_rows) {
  const auto rows = read_csv_rows(path);
  if (static_cast<int>(rows.size()) != expected_rows)
    throw ConfigError(path.string() + ": expected " + std::to_string(expected_rows) +
                      " rows (one per support point), found " + std::to_string(rows.size()));
  Vector out(expected_rows);
  for (int i = 0; i < expected_rows; ++i) {
    const int width = static_cast<int>(rows[i].size());
    const int col = column < 0 ? width - 1 : column;
    if (col >= width)
      throw ConfigError(path.string() + ": row " + std::to_string(i + 1) + " has no column " +
                        std::to_string(col));
    out[i] = rows[i][col];
  }
  return out;
}

Vector potential_values(const PotentialConfig& p, const SupportSet& support) {
  const int n = support.size();
  if (!p.builtin.empty()) {
    const Vector r2 = support.points().rowwise().squaredNorm();
    if (p.builtin == "quadratic") return 0.5 * p.scale * r2;
    return 0.25 * p.scale * (r2.array() - p.well).square().matrix();
  }
  if (!p.csv.empty()) return csv_column(p.csv, p.column, n);
  if (static_cast<int>(p.values.size()) != n)
    throw ConfigError("potential has " + std::to_string(p.values.size()) + " values for " +
                      std::to_string(n) + " support points");
  return Eigen::Map<const Vector>(p.values.data(), n);
}

Matrix interaction_matrix(const InteractionConfig& u, const SupportSet& support) {
  const int n = support.size();
  if (u.kind == "identity") return u.scale * Matrix::Identity(n, n);
  if (u.kind == "gaussian") {
    const Matrix c = build_cost_matrix(support).values();
    return u.scale * (-c.array() / (2.0 * u.width * u.width)).exp().matrix();
  }
  const auto rows = read_csv_rows(u.csv);
  if (static_cast<int>(rows.size()) != n)
    throw ConfigError(u.csv.string() + ": interaction matrix needs " + std::to_string(n) + " rows");
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw ConfigError(u.csv.string() + ": row " + std::to_string(i + 1) + " needs " +
                        std::to_string(n) + " columns");
    for (int j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

FunctionalSpec agent_spec(const AgentConfig& a, const SupportSet& support) {
  std::vector<FunctionalSpec> parts;
  if (a.potential) parts.push_back(FunctionalSpec::linear(potential_values(*a.potential, support)));
  if (a.beta) parts.push_back(FunctionalSpec::entropy(*a.beta));
  if (a.interaction)
    parts.push_back(FunctionalSpec::interaction(interaction_matrix(*a.interaction, support)));
  return parts.size() == 1 ? parts.front() : FunctionalSpec::sum(parts);
}

std::optional<ProbabilityVector> initial_measure(const RunConfig& c, const SupportSet& support) {
  const InitialConfig& i = c.initial;
  const int n = support.size();
  if (i.kind == "uniform") return std::nullopt;
  if (i.kind == "gaussian") {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(support.dim());
    if (!i.mean.empty()) {
      if (static_cast<int>(i.mean.size()) != support.dim())
        throw ConfigError("initial mean has " + std::to_string(i.mean.size()) +
                          " coordinates for a " + std::to_string(support.dim()) + "-d support");
      for (int d = 0; d < support.dim(); ++d) mean[d] = i.mean[d];
    }
    const Vector r2 = (support.points().rowwise() - mean).rowwise().squaredNorm();
    const Vector w = (-(r2.array() - r2.minCoeff()) / (2.0 * i.variance)).exp().matrix();
    return normalize(w);
  }
  Vector w;
  if (i.kind == "values") {
    if (static_cast<int>(i.values.size()) != n)
      throw ConfigError("initial measure has " + std::to_string(i.values.size()) + " values for " +
                        std::to_string(n) + " support points");
    w = Eigen::Map<const Vector>(i.values.data(), n);
  } else {
    w = csv_column(i.csv, -1, n);
  }
  try {
    return validate_simplex(w, c.tolerances.simplex);
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("initial measure: ") + e.what());
  }
}

}  // namespace

const char* to_string(RunMode mode) { return mode == RunMode::solve ? "solve" : "flow"; }

const char* to_string(TransportChoice transport) {
  return transport == TransportChoice::inproc ? "inproc" : "socket";
}

RunConfig parse_config(const std::string& text, const fs::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  return parse_root(root, base_dir.empty() ? fs::current_path() : base_dir);
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read configuration " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config(buf.str(), fs::absolute(path).parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string echo_config(const RunConfig& c) {
  Json j;
  j["mode"] = to_string(c.mode);
  j["alpha"] = c.alpha;
  j["epsilon"] = c.epsilon;
  if (const auto* g = std::get_if<GridSpec>(&c.support)) {
    j["support"]["grid"] = {{"dim", g->dim}, {"min", g->min}, {"max", g->max}, {"count", g->count}};
  } else {
    j["support"]["csv"] = std::get<CsvSupport>(c.support).path.string();
  }
  Json agents = Json::array();
  for (const auto& a : c.agents) {
    Json aj = Json::object();
    if (a.potential) aj["potential"] = potential_json(*a.potential);
    if (a.beta) aj["beta"] = *a.beta;
    if (a.interaction) aj["interaction"] = interaction_json(*a.interaction);
    agents.push_back(std::move(aj));
  }
  j["agents"] = std::move(agents);
  j["initial"] = initial_json(c.initial);
  const auto& t = c.tolerances;
  j["tolerances"] = {{"primal", t.primal},   {"dual", t.dual},
                     {"inner", t.inner},     {"subproblem", t.subproblem},
                     {"prox", t.prox},       {"simplex", t.simplex},
                     {"gradient_agreement", t.gradient_agreement}};
  j["caps"] = {{"outer", c.caps.outer},
               {"inner", c.caps.inner},
               {"subproblem", c.caps.subproblem},
               {"prox", c.caps.prox}};
  j["rho"] = c.rho;
  j["adapt_rho"] = c.adapt_rho;
  j["adapt_alpha"] = c.adapt_alpha;
  j["allow_zeros"] = c.allow_zeros;
  j["stabilize_ratio"] = c.stabilize_ratio;
  if (c.steps) j["steps"] = *c.steps;
  j["output"] = c.output.string();
  j["seed"] = c.seed;
  j["deterministic"] = c.deterministic;
  j["transport"] = to_string(c.transport);
  j["threads"] = c.threads;
  return j.dump(2);
}

SupportSet build_support(const RunConfig& c) {
  try {
    if (const auto* g = std::get_if<GridSpec>(&c.support)) return SupportSet::grid(*g);
    return SupportSet::from_csv(std::get<CsvSupport>(c.support).path);
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("support: ") + e.what());
  }
}

Problem build_problem(const RunConfig& c) {
  SupportSet support = build_support(c);
  std::vector<FunctionalSpec> specs;
  for (std::size_t i = 0; i < c.agents.size(); ++i) {
    try {
      specs.push_back(agent_spec(c.agents[i], support));
    } catch (const ConfigError& e) {
      throw ConfigError("agent " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  auto initial = initial_measure(c, support);
  KernelOptions ko;
  ko.stabilize_ratio = c.stabilize_ratio;
  return Problem::make(std::move(support), std::move(specs), c.epsilon, ko, std::move(initial));
}

ConsensusParams build_params(const RunConfig& c) {
  ConsensusParams p;
  p.alpha = c.alpha;
  p.tol_primal = c.tolerances.primal;
  p.tol_dual = c.tolerances.dual;
  p.max_outer = c.caps.outer;
  p.adapt_alpha = c.adapt_alpha;
  p.threads = static_cast<std::size_t>(c.threads);
  p.prox_tol = c.tolerances.prox;
  p.prox_max_iter = c.caps.prox;
  p.allow_zeros = c.allow_zeros;
  p.simplex_tol = c.tolerances.simplex;
  p.deterministic = c.deterministic;
  p.inner.tol = c.tolerances.inner;
  p.inner.max_iter = c.caps.inner;
  p.inner.rho = c.rho;
  p.inner.adapt_rho = c.adapt_rho;
  p.inner.subproblem_tol = c.tolerances.subproblem;
  p.inner.subproblem_max_iter = c.caps.subproblem;
  p.inner.gradient_agreement_tol = c.tolerances.gradient_agreement;
  p.inner.simplex_tol = c.tolerances.simplex;
  p.inner.allow_zeros = c.allow_zeros;
  p.inner.threads = static_cast<std::size_t>(c.threads);
  return p;
}

}  // namespace wcadmm
