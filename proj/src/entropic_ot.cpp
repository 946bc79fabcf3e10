#include "wcadmm/entropic_ot.hpp"

#include "wcadmm/errors.hpp"
#include "wcadmm/log_kernel.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace wcadmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<int> positive_support(const ProbabilityVector& p, bool allow_zeros, const char* name) {
  std::vector<int> idx;
  for (int i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) {
      idx.push_back(i);
    } else if (!allow_zeros) {
      throw ValidationError(std::string(name) + " has a zero entry at " + std::to_string(i) +
                            " (enable zero handling to restrict the support)");
    }
  }
  return idx;
}

Matrix submatrix(const Matrix& m, const std::vector<int>& rows, const std::vector<int>& cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  return out;
}

Vector gather(const Vector& v, const std::vector<int>& idx) {
  Vector out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

struct ScalingState {
  Vector log_y;
  Vector log_z;
  int iterations = 0;
  double error = std::numeric_limits<double>::infinity();
  bool ok = false;
};

// Marginal errors are measured on exp(log scalings) in both variants.
double marginal_error(const Matrix& gamma, const Matrix& log_gamma, const Vector& log_y,
                      const Vector& log_z, const Vector& xi, const Vector& eta) {
  const Vector rows = (log_y + detail::log_apply(gamma, log_gamma, log_z)).array().exp().matrix();
  const Vector cols =
      (log_z + detail::log_apply_transpose(gamma, log_gamma, log_y)).array().exp().matrix();
  return std::max((rows - xi).lpNorm<1>(), (cols - eta).lpNorm<1>());
}

ScalingState run_log_domain(const Matrix& gamma, const Matrix& log_gamma, const Vector& xi,
                            const Vector& eta, const SinkhornOptions& opt) {
  ScalingState s;
  const Vector log_xi = xi.array().log().matrix();
  const Vector log_eta = eta.array().log().matrix();
  s.log_z = Vector::Zero(eta.size());
  for (int it = 1; it <= opt.max_iter; ++it) {
    s.log_y = log_xi - detail::log_apply(gamma, log_gamma, s.log_z);
    s.log_z = log_eta - detail::log_apply_transpose(gamma, log_gamma, s.log_y);
    s.iterations = it;
    if (!s.log_y.allFinite() || !s.log_z.allFinite())
      throw NumericError("log-domain Sinkhorn produced non-finite scalings");
    s.error = marginal_error(gamma, log_gamma, s.log_y, s.log_z, xi, eta);
    if (s.error <= opt.tol) {
      s.ok = true;
      return s;
    }
  }
  return s;
}

// Returns ok = false with iterations = -1 on a floating-point breakdown so the
// caller can retry in the log domain.
ScalingState run_plain(const Matrix& gamma, const Matrix& log_gamma, const Vector& xi,
                       const Vector& eta, const SinkhornOptions& opt) {
  ScalingState s;
  Vector y(xi.size());
  Vector z = Vector::Ones(eta.size());
  for (int it = 1; it <= opt.max_iter; ++it) {
    y = xi.cwiseQuotient(gamma * z);
    z = eta.cwiseQuotient(gamma.transpose() * y);
    s.iterations = it;
    if (!y.allFinite() || !z.allFinite() || (y.array() <= 0.0).any() || (z.array() <= 0.0).any()) {
      s.iterations = -1;
      return s;
    }
    const double er = (y.cwiseProduct(gamma * z) - xi).lpNorm<1>();
    const double ec = (z.cwiseProduct(gamma.transpose() * y) - eta).lpNorm<1>();
    s.error = std::max(er, ec);
    if (s.error <= opt.tol) break;
  }
  s.log_y = y.array().log().matrix();
  s.log_z = z.array().log().matrix();
  s.error = marginal_error(gamma, log_gamma, s.log_y, s.log_z, xi, eta);
  s.ok = s.error <= opt.tol;
  return s;
}

}  // namespace

SinkhornResult sinkhorn_plan(const ProbabilityVector& xi, const ProbabilityVector& eta,
                             const GibbsKernel& kernel, const SinkhornOptions& options) {
  const int n = kernel.size();
  if (xi.size() != n || eta.size() != n)
    throw ValidationError("marginals do not match the kernel size");
  if (!(options.tol > 0.0)) throw ParameterError("Sinkhorn tolerance must be positive");
  if (options.max_iter < 1) throw ParameterError("Sinkhorn max_iter must be positive");

  const auto rows = positive_support(xi, options.allow_zeros, "xi");
  const auto cols = positive_support(eta, options.allow_zeros, "eta");
  const bool full = static_cast<int>(rows.size()) == n && static_cast<int>(cols.size()) == n;

  const Matrix gamma = full ? kernel.kernel() : submatrix(kernel.kernel(), rows, cols);
  const Matrix log_gamma = full ? kernel.log_kernel() : submatrix(kernel.log_kernel(), rows, cols);
  const Vector xs = gather(xi.weights(), rows);
  const Vector es = gather(eta.weights(), cols);

  ScalingState st;
  if (!kernel.log_domain()) st = run_plain(gamma, log_gamma, xs, es, options);
  if (kernel.log_domain() || st.iterations < 0) st = run_log_domain(gamma, log_gamma, xs, es, options);
  if (!st.ok)
    throw IterationLimitError("Sinkhorn did not reach marginal tolerance; last error " +
                                  std::to_string(st.error),
                              st.error, st.iterations);

  const double eps = kernel.epsilon();
  Matrix plan = Matrix::Zero(n, n);
  double value = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const double log_m = st.log_y[i] + log_gamma(i, j) + st.log_z[j];
      const double m = std::exp(log_m);
      plan(rows[i], cols[j]) = m;
      if (m > 0.0) value += m * (0.5 * kernel.cost().values()(rows[i], cols[j]) + eps * log_m);
    }
  }

  SinkhornScalings sc{std::move(st.log_y), std::move(st.log_z), rows, cols};
  const double tol = std::max(options.tol, 64 * std::numeric_limits<double>::epsilon());
  auto tp = TransportPlan::make(std::move(plan), xi, eta, tol * (1.0 + 1e-6));
  return SinkhornResult{std::move(tp), std::move(sc), value, st.iterations, st.error};
}

void write_plan_csv(const TransportPlan& plan, std::ostream& out) {
  const Matrix& m = plan.matrix();
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
}

double conjugate_value_grad(const Vector& u, const ProbabilityVector& mu,
                            const GibbsKernel& kernel, Vector& gradient, bool allow_zeros) {
  const int n = kernel.size();
  if (u.size() != n || mu.size() != n) throw ValidationError("conjugate: size mismatch");
  if (!u.allFinite()) throw NumericError("conjugate evaluated at a non-finite point");
  if (!allow_zeros && !mu.strictly_positive())
    throw ValidationError("conjugate: mu has zero entries (enable zero handling)");
  const double eps = kernel.epsilon();
  const Vector& w = mu.weights();

  double value = 0.0;
  if (!kernel.log_domain()) {
    // exp((u - max u)/eps) is <= 1, so only underflow can hurt; detected below.
    const double shift = u.maxCoeff();
    const Vector a = ((u.array() - shift) / eps).exp().matrix();
    const Vector s = kernel.kernel() * a;
    bool healthy = true;
    for (int i = 0; i < n; ++i)
      if (w[i] > 0.0 && !(s[i] > 1e-280)) healthy = false;
    if (healthy) {
      Vector ratio(n);
      for (int i = 0; i < n; ++i) {
        ratio[i] = w[i] > 0.0 ? w[i] / s[i] : 0.0;
        if (w[i] > 0.0) value += w[i] * (std::log(s[i]) + shift / eps - std::log(w[i]));
      }
      gradient = a.cwiseProduct(kernel.kernel().transpose() * ratio);
      value *= eps;
      if (std::isfinite(value) && gradient.allFinite()) return value;
    }
    value = 0.0;
  }

  const Vector scaled = u / eps;
  const Vector row_lse = detail::log_apply(kernel, scaled);
  Vector log_weight(n);
  for (int i = 0; i < n; ++i) {
    if (w[i] > 0.0) {
      const double lw = std::log(w[i]);
      value += w[i] * (row_lse[i] - lw);
      log_weight[i] = lw - row_lse[i];
    } else {
      log_weight[i] = kNegInf;
    }
  }
  gradient = (scaled + detail::log_apply_transpose(kernel, log_weight)).array().exp().matrix();
  value *= eps;
  if (!std::isfinite(value) || !gradient.allFinite())
    throw NumericError("conjugate evaluation is non-finite after log-domain fallback");
  return value;
}

Matrix conjugate_hessian(const Vector& u, const ProbabilityVector& mu, const GibbsKernel& kernel,
                         bool allow_zeros) {
  const int n = kernel.size();
  if (u.size() != n || mu.size() != n) throw ValidationError("conjugate: size mismatch");
  if (!u.allFinite()) throw NumericError("conjugate evaluated at a non-finite point");
  if (!allow_zeros && !mu.strictly_positive())
    throw ValidationError("conjugate: mu has zero entries (enable zero handling)");
  const double eps = kernel.epsilon();
  const Vector scaled = u / eps;
  const Vector row_lse = detail::log_apply(kernel, scaled);
  const Vector& w = mu.weights();

  // Rows of P scaled by sqrt(mu_i), so P^T diag(mu) P = Q^T Q.
  Matrix q = Matrix::Zero(n, n);
  Vector zeta = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (!(w[i] > 0.0)) continue;
    for (int j = 0; j < n; ++j) {
      const double p = std::exp(kernel.log_kernel()(i, j) + scaled[j] - row_lse[i]);
      q(i, j) = std::sqrt(w[i]) * p;
      zeta[j] += w[i] * p;
    }
  }
  Matrix h = -(q.transpose() * q);
  h.diagonal() += zeta;
  h /= eps;
  if (!h.allFinite()) throw NumericError("conjugate Hessian is non-finite");
  return h;
}

ConjugateEval conjugate_eval(const Multiplier& u, const ProbabilityVector& mu,
                             const GibbsKernel& kernel, const ConjugateOptions& options) {
  Vector g;
  const double v = conjugate_value_grad(u.values(), mu, kernel, g, options.allow_zeros);
  return ConjugateEval{v, validate_simplex(g, options.simplex_tol)};
}

}  // namespace wcadmm
