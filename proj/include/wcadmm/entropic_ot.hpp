#pragma once

// Entropy-regularized optimal transport between two probability vectors on a
// shared support:
//
//   W_eps(xi, eta) = min_{M in Pi(xi, eta)} < C/2 + eps log M, M >
//
// and the Legendre-Fenchel conjugate of zeta -> W_eps(mu, zeta), which the
// barycenter dual is built on.

#include "wcadmm/measures.hpp"

#include <iosfwd>
#include <vector>

namespace wcadmm {

struct SinkhornOptions {
  /// Stop when max(|M1 - xi|_1, |M^T 1 - eta|_1) <= tol.
  double tol = 1e-9;
  int max_iter = 100000;
  /// Restrict to the positive supports of xi and eta instead of rejecting
  /// zero entries.
  bool allow_zeros = false;
};

/// M = diag(y) Gamma diag(z), stored as log y and log z over the row and
/// column supports actually used.
struct SinkhornScalings {
  Vector log_y;
  Vector log_z;
  std::vector<int> row_support;
  std::vector<int> col_support;

  Vector y() const { return log_y.array().exp().matrix(); }
  Vector z() const { return log_z.array().exp().matrix(); }
};

struct SinkhornResult {
  TransportPlan plan;
  SinkhornScalings scalings;
  /// < C/2 + eps log M, M >
  double value;
  int iterations;
  double marginal_error;
};

SinkhornResult sinkhorn_plan(const ProbabilityVector& xi, const ProbabilityVector& eta,
                             const GibbsKernel& kernel, const SinkhornOptions& options = {});

/// Debug dump, one plan row per CSV line.
void write_plan_csv(const TransportPlan& plan, std::ostream& out);

struct ConjugateEval {
  double value;
  /// The maximizing zeta, i.e. the gradient of the conjugate at u.
  ProbabilityVector gradient;
};

struct ConjugateOptions {
  bool allow_zeros = false;
  double simplex_tol = kDefaultSimplexTol;
};

/// (W_eps,mu)^*(u) = sup_zeta <u, zeta> - W_eps(mu, zeta)
///                = eps sum_i mu_i log( sum_j Gamma_ij exp(u_j / eps) / mu_i )
/// together with its gradient
///   zeta_j = sum_i mu_i Gamma_ij exp(u_j/eps) / sum_l Gamma_il exp(u_l/eps).
ConjugateEval conjugate_eval(const Multiplier& u, const ProbabilityVector& mu,
                             const GibbsKernel& kernel, const ConjugateOptions& options = {});

/// Value-and-gradient on raw vectors, for inner solvers that evaluate the
/// conjugate many times. No simplex validation of the gradient.
double conjugate_value_grad(const Vector& u, const ProbabilityVector& mu,
                            const GibbsKernel& kernel, Vector& gradient,
                            bool allow_zeros = false);

/// Hessian of the conjugate at u: (diag(zeta) - P^T diag(mu) P) / eps, where
/// row i of P is the conditional plan Gamma_i. exp(u/eps) / normalizer.
/// Positive semidefinite with the constant vector in its kernel.
Matrix conjugate_hessian(const Vector& u, const ProbabilityVector& mu, const GibbsKernel& kernel,
                         bool allow_zeros = false);

}  // namespace wcadmm
