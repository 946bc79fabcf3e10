#pragma once

// Kernel products carried out on log-scalings. A product Gamma x is
// evaluated as max(log x) + log(Gamma exp(log x - max(log x))); rows whose
// shifted sum falls into the subnormal range are recomputed with an exact
// per-entry log-sum-exp over log(Gamma).

#include "wcadmm/measures.hpp"

namespace wcadmm::detail {

/// log(sum_j exp(v_j)); -inf for an all -inf input.
double log_sum_exp(const Vector& v);

/// r_i = log sum_j Gamma_ij exp(log_x_j) for an arbitrary (possibly
/// rectangular) kernel block.
Vector log_apply(const Matrix& gamma, const Matrix& log_gamma, const Vector& log_x);
Vector log_apply_transpose(const Matrix& gamma, const Matrix& log_gamma, const Vector& log_x);

/// r_i = log sum_j Gamma_ij exp(log_x_j)
Vector log_apply(const GibbsKernel& kernel, const Vector& log_x);

/// r_j = log sum_i Gamma_ij exp(log_x_i)
Vector log_apply_transpose(const GibbsKernel& kernel, const Vector& log_x);

}  // namespace wcadmm::detail
