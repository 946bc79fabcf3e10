#include "refcheck/dual_system.hpp"

#include <cmath>
#include <stdexcept>

namespace refcheck {

namespace {

Vec times(const Mat& a, const Vec& x) {
  Vec r(a.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) r[i] += a[i][j] * x[j];
  return r;
}

Vec times_transposed(const Mat& a, const Vec& x) {
  Vec r(a.front().size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += a[i][j] * x[i];
  return r;
}

Vec measure_from(const Vec& z, const Vec& zeta, const Mat& gamma, Vec* y_out = nullptr) {
  const Vec gz = times(gamma, z);
  Vec y(z.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = zeta[i] / gz[i];
  const Vec gty = times_transposed(gamma, y);
  Vec mu(z.size());
  for (std::size_t j = 0; j < mu.size(); ++j) mu[j] = z[j] * gty[j];
  if (y_out) *y_out = std::move(y);
  return mu;
}

}  // namespace

Mat gibbs_kernel(const Mat& cost, double eps) {
  Mat g = cost;
  for (auto& row : g)
    for (double& c : row) c = std::exp(-c / (2.0 * eps));
  return g;
}

OptimalityResidual optimality_residual(const Vec& y, const Vec& z, const Vec& zeta,
                                       const ConjugateGradient& g_star_grad, const Mat& gamma,
                                       double alpha, double eps) {
  for (std::size_t i = 0; i < y.size(); ++i)
    if (!(y[i] > 0.0) || !(z[i] > 0.0))
      throw std::domain_error("optimality_residual needs strictly positive scalings");
  const Vec gz = times(gamma, z);
  const Vec gty = times_transposed(gamma, y);
  OptimalityResidual r{0.0, 0.0};
  for (std::size_t i = 0; i < y.size(); ++i) r.marginal += std::abs(y[i] * gz[i] - zeta[i]);
  Vec minus_lambda(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) minus_lambda[j] = -alpha * eps * std::log(z[j]);
  const Vec d = g_star_grad(minus_lambda);
  for (std::size_t j = 0; j < z.size(); ++j) r.stationarity += std::abs(d[j] - z[j] * gty[j]);
  return r;
}

DualSystemSolution dual_system_solve(const Vec& zeta, const PrimalGradient& grad_g,
                                     const Mat& gamma, double alpha, double eps, double tol,
                                     int max_sweeps) {
  const std::size_t n = zeta.size();
  Vec t(n, 0.0);  // log z
  Vec z(n, 1.0);
  const double scale = alpha * eps;
  auto phi = [&](std::size_t j, double tj) {
    z[j] = std::exp(tj);
    const Vec mu = measure_from(z, zeta, gamma);
    return scale * tj + grad_g(mu)[j];
  };
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double change = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double lo = t[j] - 1.0, hi = t[j] + 1.0;
      while (phi(j, lo) > 0.0) lo -= 2.0 * (hi - lo);
      while (phi(j, hi) < 0.0) hi += 2.0 * (hi - lo);
      for (int b = 0; b < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++b) {
        const double mid = 0.5 * (lo + hi);
        (phi(j, mid) < 0.0 ? lo : hi) = mid;
      }
      const double tj = 0.5 * (lo + hi);
      change = std::max(change, std::abs(tj - t[j]));
      t[j] = tj;
      z[j] = std::exp(tj);
    }
    if (change <= tol) break;
  }
  DualSystemSolution s;
  s.z = z;
  s.mu = measure_from(z, zeta, gamma, &s.y);
  s.sweeps = sweep + 1;
  return s;
}

}  // namespace refcheck
