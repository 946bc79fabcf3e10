#include "wcadmm/log_kernel.hpp"

#include <cmath>
#include <limits>

namespace wcadmm::detail {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Below this a shifted row sum may have lost relative precision.
constexpr double kTinySum = 1e-280;

template <typename KernelView, typename LogKernelView>
Vector apply_impl(const KernelView& gamma, const LogKernelView& log_gamma, const Vector& log_x) {
  const Eigen::Index n = gamma.rows();
  const double shift = log_x.maxCoeff();
  Vector out(n);
  if (shift == kNegInf) {
    out.setConstant(kNegInf);
    return out;
  }
  const Vector scaled = (log_x.array() - shift).exp().matrix();
  const Vector sums = gamma * scaled;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sums[i] > kTinySum) {
      out[i] = shift + std::log(sums[i]);
    } else {
      out[i] = log_sum_exp((log_gamma.row(i).transpose() + log_x).eval());
    }
  }
  return out;
}

}  // namespace

double log_sum_exp(const Vector& v) {
  const double m = v.maxCoeff();
  if (m == kNegInf || !std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

Vector log_apply(const Matrix& gamma, const Matrix& log_gamma, const Vector& log_x) {
  return apply_impl(gamma, log_gamma, log_x);
}

Vector log_apply_transpose(const Matrix& gamma, const Matrix& log_gamma, const Vector& log_x) {
  return apply_impl(gamma.transpose(), log_gamma.transpose(), log_x);
}

Vector log_apply(const GibbsKernel& kernel, const Vector& log_x) {
  return apply_impl(kernel.kernel(), kernel.log_kernel(), log_x);
}

Vector log_apply_transpose(const GibbsKernel& kernel, const Vector& log_x) {
  return apply_impl(kernel.kernel().transpose(), kernel.log_kernel().transpose(), log_x);
}

}  // namespace wcadmm::detail
