#pragma once

// Dual optimality system of the entropic Wasserstein prox
//
//   (a)  y .* (Gamma z) = zeta
//   (b)  z .* (Gamma^T y) in dG^*(-lambda_1),   lambda_1 = alpha eps log z,
//
// and a generic solver for it.

#include "refcheck/types.hpp"

#include <functional>

namespace refcheck {

/// Single-valued dG^* evaluated at the given point.
using ConjugateGradient = std::function<Vec(const Vec&)>;
/// Gradient of G at a strictly positive measure.
using PrimalGradient = std::function<Vec(const Vec&)>;

struct OptimalityResidual {
  double marginal;      ///< |y .* (Gamma z) - zeta|_1
  double stationarity;  ///< |dG^*(-lambda_1) - z .* (Gamma^T y)|_1
};

/// Throws std::domain_error for non-positive scalings.
OptimalityResidual optimality_residual(const Vec& y, const Vec& z, const Vec& zeta,
                                       const ConjugateGradient& g_star_grad, const Mat& gamma,
                                       double alpha, double eps);

/// Gamma_ij = exp(-C_ij / (2 eps))
Mat gibbs_kernel(const Mat& cost, double eps);

struct DualSystemSolution {
  Vec y;
  Vec z;
  Vec mu;  ///< z .* (Gamma^T y)
  int sweeps;
};

/// Solves the system for G with gradient `grad_g` (the stationarity form
/// -alpha eps log z_j = grad_g(mu)_j) by Gauss-Seidel sweeps of scalar
/// bisections on log z_j.
DualSystemSolution dual_system_solve(const Vec& zeta, const PrimalGradient& grad_g,
                                     const Mat& gamma, double alpha, double eps,
                                     double tol = 1e-13, int max_sweeps = 100000);

}  // namespace refcheck
