#include "refcheck/dual_system.hpp"
#include "refcheck/simplex_grid.hpp"
#include "refcheck/transport_oracles.hpp"
#include "support.hpp"
#include "wcadmm/errors.hpp"
#include "wcadmm/wprox.hpp"

#include <doctest.h>

#include <cmath>

using namespace wcadmm;
using testing::from_vec;
using testing::to_mat;
using testing::to_vec;

namespace {

ProxParams params_on(const SupportSet& s, double eps, double alpha) {
  ProxParams p;
  p.alpha = alpha;
  p.kernel = make_kernel(build_cost_matrix(s), eps);
  p.tol = 1e-13;
  return p;
}

SupportSet line(std::vector<double> xs) {
  return SupportSet::from_points(Eigen::Map<const Vector>(xs.data(), Eigen::Index(xs.size())));
}

ProbabilityVector pv(std::initializer_list<double> w) {
  Vector v(static_cast<Eigen::Index>(w.size()));
  Eigen::Index i = 0;
  for (double x : w) v[i++] = x;
  return validate_simplex(v);
}

/// Gamma^T (zeta ./ (Gamma 1))
Vector blur(const ProbabilityVector& zeta, const GibbsKernel& k) {
  const Vector g1 = k.kernel() * Vector::Ones(zeta.size());
  return k.kernel().transpose() * zeta.weights().cwiseQuotient(g1);
}

/// W_eps(mu, zeta) + (1/alpha) F(mu) with W from the plain Sinkhorn oracle.
double prox_objective(const refcheck::Vec& mu, const ProbabilityVector& zeta, const ProxParams& p,
                      const std::function<double(const refcheck::Vec&)>& f) {
  return refcheck::entropic_ot(mu, to_vec(zeta.weights()), to_mat(p.kernel->cost().values()),
                               p.kernel->epsilon(), 1e-14)
             .value +
         f(mu) / p.alpha;
}

double entropy(const refcheck::Vec& mu) {
  double s = 0.0;
  for (double m : mu)
    if (m > 0.0) s += m * std::log(m);
  return s;
}

}  // namespace

TEST_CASE("linear prox on a single point") {
  const auto p = params_on(line({0.0}), 0.5, 1.0);
  const auto out = prox_linear(ProbabilityVector::uniform(1), Vector::Constant(1, 3.0), p);
  CHECK(out[0] == 1.0);
}

TEST_CASE("linear prox is invariant to constant shifts of a") {
  testing::Rng rng(41);
  for (int t = 0; t < 20; ++t) {
    const int n = rng.integer(2, 12);
    const auto p = params_on(rng.points_1d(n, -2.0, 2.0), rng.uniform(0.1, 1.0), rng.uniform(0.5, 5));
    const auto zeta = rng.simplex(n);
    const Vector a = rng.vector(n, -1.0, 1.0);
    const double c = rng.uniform(-10.0, 10.0);
    const auto x = prox_linear(zeta, a, p);
    const auto y = prox_linear(zeta, a + Vector::Constant(n, c), p);
    CHECK((x.weights() - y.weights()).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("linear prox on two points matches a grid search") {
  const auto p = params_on(line({0.0, 1.0}), 1.0, 1.0);
  const auto zeta = ProbabilityVector::uniform(2);
  Vector a(2);
  a << 0.0, 1.0;
  const auto out = prox_linear(zeta, a, p);
  const auto f = [&](const refcheck::Vec& mu) { return mu[1] * 1.0; };
  const auto best = refcheck::grid_argmin_refined(
      2, 2000, [&](const refcheck::Vec& mu) { return prox_objective(mu, zeta, p, f); });
  CHECK(refcheck::l1_distance(to_vec(out.weights()), best) <= 1e-4);
}

TEST_CASE("linear prox preserves total mass") {
  testing::Rng rng(42);
  for (int t = 0; t < 20; ++t) {
    const int n = rng.integer(2, 30);
    const auto p = params_on(rng.points_1d(n, -3.0, 3.0), rng.uniform(0.05, 1.0), 2.0);
    const auto out = prox_linear(rng.simplex(n), rng.vector(n, -2.0, 2.0), p);
    CHECK(std::abs(out.weights().sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("linear prox agrees with the generic dual solve") {
  testing::Rng rng(43);
  for (int t = 0; t < 20; ++t) {
    const int n = rng.integer(2, 5);
    const double eps = rng.uniform(0.2, 1.0);
    const double alpha = rng.uniform(0.5, 3.0);
    const auto p = params_on(rng.points_1d(n, -1.5, 1.5), eps, alpha);
    const auto zeta = rng.simplex(n);
    const Vector a = rng.vector(n, -1.0, 1.0);
    const auto oracle = refcheck::dual_system_solve(
        to_vec(zeta.weights()), [&](const refcheck::Vec&) { return to_vec(a); },
        to_mat(p.kernel->kernel()), alpha, eps);
    const auto out = prox_linear(zeta, a, p);
    CHECK(refcheck::l1_distance(to_vec(out.weights()), oracle.mu) <= 1e-6);
  }
}

TEST_CASE("large alpha approaches the blur monotonically") {
  testing::Rng rng(44);
  for (int t = 0; t < 10; ++t) {
    const int n = 8;
    const auto s = rng.points_1d(n, -2.0, 2.0);
    const auto zeta = rng.simplex(n);
    const Vector a = rng.vector(n, -3.0, 3.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double alpha : {1.0, 1e2, 1e6}) {
      const auto p = params_on(s, 0.3, alpha);
      const double d = (prox_linear(zeta, a, p).weights() - blur(zeta, *p.kernel)).lpNorm<1>();
      CHECK(d < prev);
      prev = d;
    }
    CHECK(prev < 1e-4);
  }
}

TEST_CASE("linear prox with tiny epsilon stays finite") {
  testing::Rng rng(45);
  const int n = 40;
  const auto p = params_on(rng.points_1d(n, -4.0, 4.0), 1e-3, 10.0);
  REQUIRE(p.kernel->log_domain());
  const auto out = prox_linear(rng.simplex(n), rng.vector(n, -5.0, 5.0), p);
  CHECK(out.weights().allFinite());
  CHECK(std::abs(out.weights().sum() - 1.0) <= 1e-9);
}

TEST_CASE("entropic prox: symmetric fixed point") {
  Matrix tri(3, 2);
  tri << 1.0, 0.0, -0.5, std::sqrt(3.0) / 2.0, -0.5, -std::sqrt(3.0) / 2.0;
  const auto s = SupportSet::from_points(tri);
  const auto p = params_on(s, 0.5, 2.0);
  const auto r = prox_entropic(ProbabilityVector::uniform(3), Vector::Constant(3, 0.7), 1.5, p);
  for (int i = 0; i < 3; ++i) CHECK(r.mu[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("entropic prox on a single point") {
  const auto p = params_on(line({2.0}), 0.5, 1.0);
  const auto r = prox_entropic(ProbabilityVector::uniform(1), Vector::Zero(1), 1.0, p);
  CHECK(r.mu[0] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("entropic prox on two points matches a grid search") {
  const auto p = params_on(line({0.0, 1.0}), 1.0, 1.0);
  const auto zeta = pv({0.3, 0.7});
  const auto r = prox_entropic(zeta, Vector::Zero(2), 1.0, p);
  const auto best = refcheck::grid_argmin_refined(
      2, 2000, [&](const refcheck::Vec& mu) { return prox_objective(mu, zeta, p, entropy); });
  CHECK(refcheck::l1_distance(to_vec(r.mu.weights()), best) <= 1e-4);
}

TEST_CASE("entropic prox solves the dual optimality system") {
  testing::Rng rng(46);
  for (int t = 0; t < 20; ++t) {
    const int n = rng.integer(2, 8);
    const double eps = rng.uniform(0.1, 1.0);
    const double alpha = rng.uniform(0.5, 5.0);
    const double beta = rng.uniform(0.5, 3.0);
    const auto p = params_on(rng.points_1d(n, -2.0, 2.0), eps, alpha);
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
    CHECK(res.marginal < 1e-8);
    CHECK(res.stationarity < 1e-8);

    const auto oracle = refcheck::dual_system_solve(
        to_vec(zeta.weights()),
        [&](const refcheck::Vec& mu) {
          refcheck::Vec g(mu.size());
          for (std::size_t j = 0; j < mu.size(); ++j) g[j] = (std::log(mu[j]) + 1.0) / beta + nu[j];
          return g;
        },
        to_mat(p.kernel->kernel()), alpha, eps);
    CHECK(refcheck::l1_distance(to_vec(r.mu.weights()), oracle.mu) <= 1e-8);
  }
}

TEST_CASE("entropic prox iterates stay in the positive cone") {
  testing::Rng rng(47);
  const int n = 10;
  const auto p = params_on(rng.points_1d(n, -2.0, 2.0), 0.05, 3.0);
  int calls = 0;
  bool positive = true;
  prox_entropic(rng.simplex(n), rng.vector(n, -1.0, 1.0), 1.0, p, nullptr,
                [&](int, const Vector& log_y, const Vector& log_z) {
                  ++calls;
                  positive = positive && log_y.allFinite() && log_z.allFinite() &&
                             (log_y.array().exp() > 0.0).all() && (log_z.array().exp() > 0.0).all();
                });
  CHECK(calls > 0);
  CHECK(positive);
}

TEST_CASE("entropic prox warm start reaches the same point faster") {
  testing::Rng rng(48);
  const int n = 12;
  const auto p = params_on(rng.points_1d(n, -2.0, 2.0), 0.1, 2.0);
  const auto zeta = rng.simplex(n);
  const Vector nu = rng.vector(n, -0.5, 0.5);
  const auto cold = prox_entropic(zeta, nu, 1.0, p);
  const auto warm = prox_entropic(zeta, nu, 1.0, p, &cold.scalings);
  CHECK(warm.iterations < cold.iterations);
  CHECK((warm.mu.weights() - cold.mu.weights()).lpNorm<1>() < 1e-10);
}

TEST_CASE("entropic prox iteration limit") {
  testing::Rng rng(49);
  const int n = 10;
  auto p = params_on(rng.points_1d(n, -2.0, 2.0), 0.05, 3.0);
  p.max_iter = 2;
  CHECK_THROWS_AS(prox_entropic(rng.simplex(n), Vector::Zero(n), 1.0, p), IterationLimitError);
}

TEST_CASE("dispatch: zero linear term is the blur") {
  testing::Rng rng(50);
  const int n = 6;
  const auto p = params_on(rng.points_1d(n, -1.0, 1.0), 0.4, 1.0);
  const auto zeta = rng.simplex(n);
  const auto r = prox_dispatch(zeta, FunctionalSpec::linear(Vector::Zero(n)), Vector::Zero(n), p);
  CHECK((r.mu.weights() - blur(zeta, *p.kernel)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("dispatch: identity interaction at the uniform measure is the blur") {
  testing::Rng rng(51);
  const int n = 6;
  const auto p = params_on(rng.points_1d(n, -1.0, 1.0), 0.4, 1.0);
  const auto zeta = rng.simplex(n);
  const auto uni = ProbabilityVector::uniform(n);
  const auto r = prox_dispatch(zeta, FunctionalSpec::interaction(Matrix::Identity(n, n)),
                               Vector::Zero(n), p, &uni);
  const auto lin = prox_dispatch(zeta, FunctionalSpec::linear(Vector::Constant(n, 2.0 / n)),
                                 Vector::Zero(n), p);
  CHECK((r.mu.weights() - lin.mu.weights()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((r.mu.weights() - blur(zeta, *p.kernel)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS(prox_dispatch(zeta, FunctionalSpec::interaction(Matrix::Identity(n, n)),
                             Vector::Zero(n), p));
}

TEST_CASE("dispatch: entropy routes to the entropic prox") {
  testing::Rng rng(52);
  const int n = 3;
  const auto p = params_on(rng.points_1d(n, -1.0, 1.0), 0.5, 1.0);
  const auto zeta = rng.simplex(n);
  const auto d = prox_dispatch(zeta, FunctionalSpec::entropy(1.0), Vector::Zero(n), p);
  const auto e = prox_entropic(zeta, Vector::Zero(n), 1.0, p);
  CHECK(d.mu.weights() == e.mu.weights());
  REQUIRE(d.scalings);
}

TEST_CASE("dispatch folds linear parts and multipliers") {
  testing::Rng rng(53);
  const int n = 5;
  const auto p = params_on(rng.points_1d(n, -1.0, 1.0), 0.5, 2.0);
  const auto zeta = rng.simplex(n);
  const Vector v = rng.vector(n, -1.0, 1.0);
  const Vector w = rng.vector(n, -1.0, 1.0);
  const Vector nu = rng.vector(n, -1.0, 1.0);

  const auto spec = FunctionalSpec::sum(
      {FunctionalSpec::linear(v), FunctionalSpec::entropy(2.0), FunctionalSpec::linear(w)});
  const auto d = prox_dispatch(zeta, spec, nu, p);
  const auto e = prox_entropic(zeta, nu + v + w, 2.0, p);
  CHECK((d.mu.weights() - e.mu.weights()).cwiseAbs().maxCoeff() < 1e-13);

  const auto l = prox_dispatch(zeta, FunctionalSpec::sum({FunctionalSpec::linear(v),
                                                          FunctionalSpec::linear(w)}),
                               nu, p);
  CHECK((l.mu.weights() - prox_linear(zeta, v + w + nu, p).weights()).cwiseAbs().maxCoeff() <
        1e-14);
}

TEST_CASE("unsupported compositions are refused") {
  const int n = 3;
  const auto two = FunctionalSpec::sum({FunctionalSpec::entropy(1.0), FunctionalSpec::entropy(2.0)});
  CHECK_THROWS_AS(two.validate(n), UnsupportedError);
  const auto mixed = FunctionalSpec::sum(
      {FunctionalSpec::entropy(1.0), FunctionalSpec::interaction(Matrix::Identity(n, n))});
  CHECK_THROWS_AS(mixed.validate(n), UnsupportedError);
  const auto p = params_on(line({0.0, 1.0, 2.0}), 0.5, 1.0);
  CHECK_THROWS_AS(prox_dispatch(ProbabilityVector::uniform(n), two, Vector::Zero(n), p),
                  UnsupportedError);
}

TEST_CASE("functional validation") {
  CHECK_THROWS_AS(FunctionalSpec::entropy(0.0).validate(2), ValidationError);
  CHECK_THROWS_AS(FunctionalSpec::linear(Vector::Zero(3)).validate(2), ValidationError);
  Matrix indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  CHECK_THROWS_AS(FunctionalSpec::interaction(indefinite).validate(2), ValidationError);
  Matrix asym(2, 2);
  asym << 2, 1, 0, 2;
  CHECK_THROWS_AS(FunctionalSpec::interaction(asym).validate(2), ValidationError);
  CHECK_NOTHROW(FunctionalSpec::interaction(Matrix::Identity(2, 2)).validate(2));
}

TEST_CASE("functional evaluation") {
  Vector mu(2);
  mu << 0.25, 0.75;
  Vector a(2);
  a << 1.0, 3.0;
  CHECK(FunctionalSpec::linear(a).evaluate(mu) == doctest::Approx(2.5));
  CHECK(FunctionalSpec::entropy(2.0).evaluate(mu) ==
        doctest::Approx(0.5 * (0.25 * std::log(0.25) + 0.75 * std::log(0.75))));
  Vector corner(2);
  corner << 1.0, 0.0;
  CHECK(FunctionalSpec::entropy(1.0).evaluate(corner) == 0.0);
  CHECK(FunctionalSpec::interaction(Matrix::Identity(2, 2)).evaluate(mu) ==
        doctest::Approx(0.625));
}

TEST_CASE("prox parameters are validated") {
  auto p = params_on(line({0.0, 1.0}), 0.5, 1.0);
  p.alpha = 0.0;
  CHECK_THROWS_AS(validate(p), ParameterError);
  p.alpha = 1.0;
  p.tol = 0.0;
  CHECK_THROWS_AS(validate(p), ParameterError);
}
