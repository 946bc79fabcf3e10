// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include "refcheck/finite_diff.hpp"
#include "refcheck/dual_system.hpp"
#include "refcheck/simplex_grid.hpp"
#include "refcheck/transport_oracles.hpp"
#include "support.hpp"
#include "wcadmm/barycenter.hpp"
#include "wcadmm/config.hpp"
#include "wcadmm/consensus.hpp"
#include "wcadmm/entropic_ot.hpp"
#include "wcadmm/results.hpp"
#include "wcadmm/runtime/coordinator.hpp"
#include "wcadmm/wprox.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace wcadmm;
using testing::from_vec;
using testing::to_mat;
using testing::to_vec;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... xs) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, xs...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ProxParams prox_on(const SupportSet& s, double eps, double alpha, double tol = 1e-13) {
  ProxParams p;
  p.alpha = alpha;
  p.kernel = make_kernel(build_cost_matrix(s), eps);
  p.tol = tol;
  return p;
}

/// The 1-d grid on [-4, 4] with V = x^2 / 2.
struct OuGrid {
  SupportSet support;
  Vector x;
  Vector v;
  explicit OuGrid(int n) : support(SupportSet::grid({1, -4.0, 4.0, n})) {
    x = support.points().col(0);
    v = 0.5 * x.array().square().matrix();
  }
};

double kl(const Vector& p, const Vector& q) {
  return refcheck::kl_divergence(to_vec(p), to_vec(q));
}

Outcome sinkhorn_feasibility() {
  testing::Rng rng(1001);
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = rng.integer(2, 64);
    const int dim = rng.integer(1, 3);
    Matrix pts(n, dim);
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < dim; ++d) pts(i, d) = rng.uniform(-2.0, 2.0);
    const auto k = build_gibbs_kernel(build_cost_matrix(SupportSet::from_points(pts)),
                                      rng.uniform(0.05, 1.0));
    const auto xi = rng.simplex(n, 0.01);
    const auto eta = rng.simplex(n, 0.01);
    const auto r = sinkhorn_plan(xi, eta, k);
    const Matrix& m = r.plan.matrix();
    worst = std::max({worst, (m.rowwise().sum() - xi.weights()).lpNorm<1>(),
                      (m.colwise().sum().transpose() - eta.weights()).lpNorm<1>()});
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && secs < 5.0, fmt("worst marginal error %.2e, %.2f s", worst, secs)};
}

Outcome linear_prox_oracles() {
  testing::Rng rng(1002);
  double grid_worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + t % 2;
    const double eps = rng.uniform(0.2, 1.0);
    const auto p = prox_on(rng.points_1d(n, -1.5, 1.5), eps, rng.uniform(0.5, 3.0));
    const auto zeta = rng.simplex(n);
    const Vector a = rng.vector(n, -1.0, 1.0);
    const auto mu = prox_linear(zeta, a, p);
    const auto cost = to_mat(p.kernel->cost().values());
    const auto objective = [&](const refcheck::Vec& m) {
      double lin = 0.0;
      for (int j = 0; j < n; ++j) lin += a[j] * m[j];
      return refcheck::entropic_ot(m, to_vec(zeta.weights()), cost, eps, 1e-14).value + lin / p.alpha;
    };
    const auto best = refcheck::grid_argmin_refined(n, 200, objective);
    grid_worst = std::max(grid_worst, refcheck::l1_distance(best, to_vec(mu.weights())));
  }
  double dual_worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int n = rng.integer(2, 5);
    const double eps = rng.uniform(0.2, 1.0);
    const double alpha = rng.uniform(0.5, 3.0);
    const auto p = prox_on(rng.points_1d(n, -1.5, 1.5), eps, alpha);
    const auto zeta = rng.simplex(n);
    const Vector a = rng.vector(n, -1.0, 1.0);
    const auto oracle = refcheck::dual_system_solve(
        to_vec(zeta.weights()), [&](const refcheck::Vec&) { return to_vec(a); },
        to_mat(p.kernel->kernel()), alpha, eps);
    dual_worst = std::max(
        dual_worst, refcheck::l1_distance(to_vec(prox_linear(zeta, a, p).weights()), oracle.mu));
  }
  return {grid_worst <= 1e-4 && dual_worst <= 1e-6,
          fmt("grid search L1 %.2e, dual solve L1 %.2e", grid_worst, dual_worst)};
}

Outcome shift_invariance() {
  testing::Rng rng(1003);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int n = rng.integer(2, 32);
    const auto p = prox_on(rng.points_1d(n, -2.0, 2.0), rng.uniform(0.05, 1.0), rng.uniform(0.5, 10.0));
    const auto zeta = rng.simplex(n);
    const Vector a = rng.vector(n, -1.0, 1.0);
    const double c = rng.uniform(-10.0, 10.0);
    worst = std::max(worst, (prox_linear(zeta, a, p).weights() -
                             prox_linear(zeta, a + Vector::Constant(n, c), p).weights())
                                .cwiseAbs()
                                .maxCoeff());
  }
  return {worst <= 1e-12, fmt("max difference %.2e", worst)};
}

Outcome entropic_certification() {
  testing::Rng rng(1004);
  double worst_a = 0.0, worst_b = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int n = rng.integer(2, 8);
    const double eps = rng.uniform(0.1, 1.0);
    const double alpha = rng.uniform(0.5, 5.0);
    const double beta = rng.uniform(0.5, 3.0);
    const auto p = prox_on(rng.points_1d(n, -2.0, 2.0), eps, alpha);
    const auto zeta = rng.simplex(n);
    const Vector nu = rng.vector(n, -1.0, 1.0);
    const auto r = prox_entropic(zeta, nu, beta, p);
    const auto d_gstar = [&](const refcheck::Vec& w) {
      refcheck::Vec out(w.size());
      for (std::size_t j = 0; j < w.size(); ++j) out[j] = std::exp(beta * (w[j] - nu[j]) - 1.0);
      return out;
    };
    const auto res = refcheck::optimality_residual(to_vec(r.scalings.y()), to_vec(r.scalings.z()),
                                                   to_vec(zeta.weights()), d_gstar,
                                                   to_mat(p.kernel->kernel()), alpha, eps);
    worst_a = std::max(worst_a, res.marginal);
    worst_b = std::max(worst_b, res.stationarity);
  }
  return {worst_a < 1e-8 && worst_b < 1e-8,
          fmt("marginal residual %.2e, stationarity residual %.2e", worst_a, worst_b)};
}

Outcome conjugate_gradient_check() {
  testing::Rng rng(1005);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int n = rng.integer(2, 6);
    const auto k = build_gibbs_kernel(build_cost_matrix(rng.points_1d(n, -2.0, 2.0)),
                                      rng.uniform(0.1, 1.0));
    const auto mu = rng.simplex(n);
    const Vector u = rng.vector(n, -1.0, 1.0);
    const auto f = [&](const refcheck::Vec& x) {
      return conjugate_eval(Multiplier::from(from_vec(x)), mu, k).value;
    };
    const Vector fd = from_vec(refcheck::fd_gradient(f, to_vec(u), 1e-5));
    const Vector g = conjugate_eval(Multiplier::from(u), mu, k).gradient.weights();
    worst = std::max(worst, (fd - g).norm() / g.norm());
  }
  return {worst <= 1e-5, fmt("max relative error %.2e", worst)};
}

Outcome zeta_update_oracle() {
  testing::Rng rng(1006);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    const auto s = rng.points_1d(3, -1.0, 1.0);
    const double eps = rng.uniform(0.3, 1.0);
    const double alpha = rng.uniform(0.5, 2.0);
    const auto mu1 = rng.simplex(3);
    const auto mu2 = rng.simplex(3);
    const Vector nu_sum = t % 2 ? rng.vector(3, -0.1, 0.1) : Vector::Zero(3);
    const BarycenterProblem bp{{mu1, mu2}, nu_sum, alpha, make_kernel(build_cost_matrix(s), eps)};
    const auto r = solve_zeta_update(bp, {});
    const auto cost = to_mat(bp.kernel->cost().values());
    const auto objective = [&](const refcheck::Vec& z) {
      double v = 0.0;
      for (const auto* m : {&mu1, &mu2})
        v += refcheck::entropic_ot(to_vec(m->weights()), z, cost, eps, 1e-14).value;
      for (int j = 0; j < 3; ++j) v -= (2.0 / alpha) * nu_sum[j] * z[j];
      return v;
    };
    const auto best = refcheck::grid_argmin_refined(3, 60, objective);
    worst = std::max(worst, refcheck::l1_distance(to_vec(r.zeta.weights()), best));
  }
  return {worst <= 1e-3, fmt("max L1 to grid search %.2e", worst)};
}

struct GibbsRun {
  SolveResult result;
  double seconds;
  double dual_ascent_error;
  Vector gibbs;
};

/// n = 1 solve with V = x^2/2 and beta = 1 on 64 points; records the
/// dual-ascent identity error along the way.
GibbsRun gibbs_run() {
  const OuGrid g(64);
  const auto spec = FunctionalSpec::sum({FunctionalSpec::linear(g.v), FunctionalSpec::entropy(1.0)});
  const auto prob = Problem::make(g.support, {spec}, 0.1);
  ConsensusParams p;
  p.alpha = 10.0;
  p.max_outer = 5000;
  std::vector<Vector> prev_nus(1, Vector::Zero(64));
  double err = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  auto result = run_solve(prob, p, [&](const TraceRecord&, const ConsensusState& s) {
    for (std::size_t i = 0; i < s.nus.size(); ++i) {
      const Vector d = s.nus[i] - prev_nus[i] - p.alpha * (s.mus[i].weights() - s.zeta.weights());
      err = std::max(err, d.cwiseAbs().maxCoeff());
    }
    prev_nus = s.nus;
  });
  return {std::move(result), seconds_since(t0), err,
          from_vec(refcheck::gibbs_vector(to_vec(g.v), 1.0))};
}

Outcome gibbs_stationarity(const GibbsRun& run) {
  const double d = kl(run.result.state.zeta.weights(), run.gibbs);
  return {run.result.converged && d <= 0.05 && run.seconds < 60.0,
          fmt("converged=%d after %d iterations, KL %.4f, %.2f s", int(run.result.converged),
              run.result.state.k, d, run.seconds)};
}

Outcome ou_transient() {
  const OuGrid g(64);
  const double s0 = 0.25;
  const auto init = normalize((-(g.x.array().square()) / (2.0 * s0)).exp().matrix());
  const auto spec = FunctionalSpec::sum({FunctionalSpec::linear(g.v), FunctionalSpec::entropy(1.0)});
  const auto prob = Problem::make(g.support, {spec}, 0.003, {}, init);
  ConsensusParams p;
  p.alpha = 100.0;
  const auto flow = run_flow(prob, p, 100);
  const Vector x2 = g.x.cwiseProduct(g.x);
  double worst = 0.0;
  std::string detail;
  for (const int k : {25, 50, 100}) {
    const double t = k * flow.time_step;
    const double ref = s0 * std::exp(-2.0 * t) + (1.0 - std::exp(-2.0 * t));
    const double rel = (flow.trajectory[k].weights().dot(x2) - ref) / ref;
    worst = std::max(worst, std::abs(rel));
    detail += fmt("t=%.2f %+.2f%% ", t, 100.0 * rel);
  }
  return {worst <= 0.10, detail + "(eps 0.003)"};
}

Outcome splitting_consistency() {
  const OuGrid g(32);
  const auto lin = FunctionalSpec::linear(g.v);
  const auto ent = FunctionalSpec::entropy(1.0);
  ConsensusParams p;
  p.alpha = 10.0;
  p.max_outer = 5000;
  const auto t0 = std::chrono::steady_clock::now();
  const auto one = run_solve(Problem::make(g.support, {FunctionalSpec::sum({lin, ent})}, 0.1), p);
  const auto two = run_solve(Problem::make(g.support, {lin, ent}, 0.1), p);
  const double d = (one.state.zeta.weights() - two.state.zeta.weights()).lpNorm<1>();
  return {one.converged && two.converged && d <= 5e-3,
          fmt("n=1 converged=%d (%d it), n=2 converged=%d (%d it), L1 %.4f, %.1f s",
              int(one.converged), one.state.k, int(two.converged), two.state.k, d,
              seconds_since(t0))};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome distributed_equivalence() {
  const OuGrid g(16);
  std::vector<FunctionalSpec> specs;
  for (int i = 0; i < 4; ++i) {
    const double c = -1.5 + i;
    const Vector v = 0.5 * (g.x.array() - c).square().matrix();
    specs.push_back(i % 2 ? FunctionalSpec::sum({FunctionalSpec::linear(v), FunctionalSpec::entropy(1.0)})
                          : FunctionalSpec::linear(v));
  }
  const auto prob = Problem::make(g.support, specs, 0.2);
  ConsensusParams p;
  p.alpha = 2.0;
  p.max_outer = 10;
  p.tol_primal = p.tol_dual = 1e-300;
  p.deterministic = true;

  const auto serial = run_solve(prob, p);
  runtime::DistributedOptions inproc;
  inproc.inproc.jitter_seed = 42;
  const auto a = runtime::run_distributed(prob, p, inproc);
  runtime::DistributedOptions socket;
  socket.transport = runtime::TransportKind::socket;
  const auto b = runtime::run_distributed(prob, p, socket);

  double gap = (serial.state.zeta.weights() - a.state.zeta.weights()).cwiseAbs().maxCoeff();
  for (std::size_t i = 0; i < 4; ++i) {
    gap = std::max(gap, (serial.state.mus[i].weights() - a.state.mus[i].weights()).cwiseAbs().maxCoeff());
    gap = std::max(gap, (serial.state.nus[i] - a.state.nus[i]).cwiseAbs().maxCoeff());
  }

  RunConfig config;
  config.deterministic = true;
  std::random_device rd;
  const auto dir = std::filesystem::temp_directory_path() / ("wcadmm_acceptance_" + std::to_string(rd()));
  emit_results(dir / "inproc", config, prob.support, a);
  emit_results(dir / "socket", config, prob.support, b);
  bool identical = true;
  for (const char* f : {"zeta.csv", "mu_agent_1.csv", "mu_agent_2.csv", "mu_agent_3.csv",
                        "mu_agent_4.csv", "residuals.csv"})
    identical = identical && read_file(dir / "inproc" / f) == read_file(dir / "socket" / f) &&
                !read_file(dir / "inproc" / f).empty();
  std::filesystem::remove_all(dir);
  return {a.state.k == 10 && gap <= 1e-12 && identical,
          fmt("max state gap %.2e over %d rounds, socket CSVs %s", gap, a.state.k,
              identical ? "byte-identical" : "differ")};
}

Outcome dual_ascent_identity(const GibbsRun& run) {
  return {run.dual_ascent_error <= 1e-14,
          fmt("max deviation %.2e over %d iterations", run.dual_ascent_error, run.result.state.k)};
}

Outcome vanishing_epsilon() {
  testing::Rng rng(1012);
  bool monotone = true;
  double worst_final = 0.0, worst_extrapolated = 0.0;
  int over = 0;
  const double eps[] = {1.0, 0.3, 0.1, 0.03};
  for (int t = 0; t < 20; ++t) {
    const auto cost = build_cost_matrix(rng.points_1d(4, 0.0, 2.0));
    const auto xi = rng.simplex(4);
    const auto eta = rng.simplex(4);
    const double exact =
        refcheck::exact_ot_value(to_vec(xi.weights()), to_vec(eta.weights()), to_mat(cost.values()));
    double values[4];
    double prev = std::numeric_limits<double>::infinity();
    for (int e = 0; e < 4; ++e) {
      values[e] = sinkhorn_plan(xi, eta, build_gibbs_kernel(cost, eps[e])).value;
      const double gap = std::abs(values[e] - exact);
      monotone = monotone && gap < prev;
      prev = gap;
    }
    worst_final = std::max(worst_final, prev);
    over += prev > 5e-2;
    // Linear extrapolation to eps = 0 through the last two values.
    const double limit = values[3] + eps[3] * (values[3] - values[2]) / (eps[2] - eps[3]);
    worst_extrapolated = std::max(worst_extrapolated, std::abs(limit - exact));
  }
  return {monotone && worst_final <= 5e-2,
          fmt("gap shrinks monotonically: %s, worst gap at eps 0.03 %.4f (%d of 20 above 0.05), "
              "worst extrapolated gap %.4f",
              monotone ? "yes" : "no", worst_final, over, worst_extrapolated)};
}

}  // namespace

int main() {
  int failures = 0;
  const auto report = [&](int k, const char* what, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", k, what, o.detail.c_str());
    std::fflush(stdout);
  };

  std::optional<GibbsRun> gibbs;
  const auto gibbs_once = [&]() -> const GibbsRun& {
    if (!gibbs) gibbs = gibbs_run();
    return *gibbs;
  };

  report(1, "Sinkhorn feasibility", sinkhorn_feasibility);
  report(2, "linear prox vs grid search and dual solve", linear_prox_oracles);
  report(3, "linear prox shift invariance", shift_invariance);
  report(4, "entropic prox optimality residuals", entropic_certification);
  report(5, "conjugate gradient vs finite differences", conjugate_gradient_check);
  report(6, "zeta-update vs grid search", zeta_update_oracle);
  report(7, "Gibbs stationarity", [&] { return gibbs_stationarity(gibbs_once()); });
  report(8, "OU transient", ou_transient);
  report(9, "consensus splitting consistency", splitting_consistency);
  report(10, "distributed equivalence", distributed_equivalence);
  report(11, "dual-ascent identity", [&] { return dual_ascent_identity(gibbs_once()); });
  report(12, "vanishing epsilon", vanishing_epsilon);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
