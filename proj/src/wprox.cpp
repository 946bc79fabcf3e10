#include "wcadmm/wprox.hpp"

#include "wcadmm/errors.hpp"
#include "wcadmm/log_kernel.hpp"

#include <cmath>
#include <limits>

namespace wcadmm {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_zeta(const ProbabilityVector& zeta, const ProxParams& p) {
  if (zeta.size() != p.kernel->size()) throw ValidationError("prox: zeta does not match kernel");
  if (!p.allow_zeros && !zeta.strictly_positive())
    throw ValidationError("prox: zeta has zero entries (enable zero handling)");
}

Vector log_of(const Vector& v) { return v.array().log().matrix(); }

}  // namespace

void validate(const ProxParams& p) {
  if (!(p.alpha > 0.0) || !std::isfinite(p.alpha)) throw ParameterError("alpha must be positive");
  if (!p.kernel) throw ParameterError("prox parameters carry no kernel");
  if (!(p.tol > 0.0)) throw ParameterError("prox tolerance must be positive");
  if (p.max_iter < 1) throw ParameterError("prox max_iter must be positive");
}

FunctionalSpec FunctionalSpec::linear(Vector a) {
  FunctionalSpec s;
  s.terms_.emplace_back(LinearTerm{std::move(a)});
  return s;
}

FunctionalSpec FunctionalSpec::entropy(double beta) {
  FunctionalSpec s;
  s.terms_.emplace_back(EntropyTerm{beta});
  return s;
}

FunctionalSpec FunctionalSpec::interaction(Matrix U) {
  FunctionalSpec s;
  s.terms_.emplace_back(InteractionTerm{std::move(U)});
  return s;
}

FunctionalSpec FunctionalSpec::sum(const std::vector<FunctionalSpec>& parts) {
  FunctionalSpec s;
  for (const auto& p : parts) s.terms_.insert(s.terms_.end(), p.terms_.begin(), p.terms_.end());
  return s;
}

void FunctionalSpec::validate(int n) const {
  if (terms_.empty()) throw ValidationError("functional has no terms");
  int entropies = 0;
  bool interaction = false;
  for (const auto& t : terms_) {
    std::visit(overloaded{
                   [&](const LinearTerm& l) {
                     if (l.a.size() != n)
                       throw ValidationError("linear term has " + std::to_string(l.a.size()) +
                                             " entries, support has " + std::to_string(n));
                     if (!l.a.allFinite()) throw ValidationError("linear term is not finite");
                   },
                   [&](const EntropyTerm& e) {
                     if (!(e.beta > 0.0) || !std::isfinite(e.beta))
                       throw ValidationError("entropy beta must be positive");
                     ++entropies;
                   },
                   [&](const InteractionTerm& i) {
                     if (i.U.rows() != n || i.U.cols() != n)
                       throw ValidationError("interaction matrix must be N x N");
                     if (!i.U.allFinite()) throw ValidationError("interaction matrix is not finite");
                     const double scale = std::max(1.0, i.U.cwiseAbs().maxCoeff());
                     if ((i.U - i.U.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
                       throw ValidationError("interaction matrix is not symmetric");
                     Eigen::LLT<Matrix> llt(i.U);
                     if (llt.info() != Eigen::Success)
                       throw ValidationError("interaction matrix is not positive definite");
                     interaction = true;
                   },
               },
               t);
  }
  if (entropies > 1) throw UnsupportedError("functional has more than one entropy term");
  if (entropies == 1 && interaction)
    throw UnsupportedError("interaction combined with entropy has no supported prox");
}

std::optional<double> FunctionalSpec::entropy_beta() const {
  for (const auto& t : terms_)
    if (const auto* e = std::get_if<EntropyTerm>(&t)) return e->beta;
  return std::nullopt;
}

bool FunctionalSpec::has_interaction() const {
  for (const auto& t : terms_)
    if (std::holds_alternative<InteractionTerm>(t)) return true;
  return false;
}

double FunctionalSpec::evaluate(const Vector& mu) const {
  double total = 0.0;
  for (const auto& t : terms_) {
    std::visit(overloaded{
                   [&](const LinearTerm& l) { total += l.a.dot(mu); },
                   [&](const EntropyTerm& e) {
                     double h = 0.0;
                     for (Eigen::Index i = 0; i < mu.size(); ++i)
                       if (mu[i] > 0.0) h += mu[i] * std::log(mu[i]);
                     total += h / e.beta;
                   },
                   [&](const InteractionTerm& i) { total += mu.dot(i.U * mu); },
               },
               t);
  }
  return total;
}

ProbabilityVector prox_linear(const ProbabilityVector& zeta, const Vector& a, const ProxParams& p) {
  validate(p);
  check_zeta(zeta, p);
  const GibbsKernel& k = *p.kernel;
  if (a.size() != k.size()) throw ValidationError("prox_linear: potential size mismatch");
  if (!a.allFinite()) throw ValidationError("prox_linear: potential is not finite");

  // Constant shifts of a cancel, so anchor the exponent at zero.
  const Vector log_k = -(a.array() - a.minCoeff()).matrix() / (p.alpha * k.epsilon());

  if (!k.log_domain()) {
    const Vector kv = log_k.array().exp().matrix();
    const Vector denom = k.kernel() * kv;
    if ((denom.array() > 1e-280).all()) {
      const Vector out = kv.cwiseProduct(k.kernel().transpose() * zeta.weights().cwiseQuotient(denom));
      if (out.allFinite()) return validate_simplex(out, p.simplex_tol);
    }
  }
  const Vector t = log_of(zeta.weights()) - detail::log_apply(k, log_k);
  const Vector out = (log_k + detail::log_apply_transpose(k, t)).array().exp().matrix();
  if (!out.allFinite()) throw NumericError("prox_linear is non-finite after log-domain retry");
  return validate_simplex(out, p.simplex_tol);
}

EntropicProxResult prox_entropic(const ProbabilityVector& zeta, const Vector& nu, double beta,
                                 const ProxParams& p, const SinkhornScalings* warm,
                                 const BlockObserver& observer) {
  validate(p);
  check_zeta(zeta, p);
  const GibbsKernel& k = *p.kernel;
  const int n = k.size();
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ParameterError("entropy beta must be positive");
  if (nu.size() != n) throw ValidationError("prox_entropic: multiplier size mismatch");
  if (!nu.allFinite()) throw ValidationError("prox_entropic: multiplier is not finite");

  const double power = 1.0 / (1.0 + beta * p.alpha * k.epsilon());
  // mu is invariant under nu -> nu + c; the shift keeps exp(-beta nu - 1) in range.
  const Vector target = (-beta * (nu.array() - nu.minCoeff()) - 1.0).matrix();
  // Scalings for nu and for the shifted multiplier differ by this factor in
  // log z (and its negative in log y).
  const double frame = nu.minCoeff() / (p.alpha * k.epsilon());
  const Vector log_zeta = log_of(zeta.weights());

  Vector log_z = Vector::Zero(n);
  if (warm && warm->log_z.size() == n && warm->log_z.allFinite())
    log_z = warm->log_z.array() + frame;
  Vector log_y = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());

  auto finite_in_cone = [&](const Vector& v, const Vector& ref) {
    for (int i = 0; i < n; ++i)
      if (!(std::isfinite(v[i]) || (v[i] == -std::numeric_limits<double>::infinity() &&
                                    ref[i] == 0.0)))
        return false;
    return true;
  };

  double change = std::numeric_limits<double>::infinity();
  int it = 0;
  while (true) {
    ++it;
    Vector new_y = log_zeta - detail::log_apply(k, log_z);
    Vector new_z = power * (target - detail::log_apply_transpose(k, new_y));
    if (!finite_in_cone(new_y, zeta.weights()) || !new_z.allFinite())
      throw NumericError("entropic prox left the positive cone at iteration " + std::to_string(it));
    if (observer) observer(it, new_y, new_z);
    double dy = 0.0;
    for (int i = 0; i < n; ++i)
      if (std::isfinite(new_y[i])) dy = std::max(dy, std::abs(new_y[i] - log_y[i]));
    if (it == 1) dy = std::numeric_limits<double>::infinity();
    change = std::max(dy, (new_z - log_z).cwiseAbs().maxCoeff());
    log_y = std::move(new_y);
    log_z = std::move(new_z);
    if (change <= p.tol) break;
    if (it >= p.max_iter)
      throw IterationLimitError("entropic prox block iteration hit its cap; last change " +
                                    std::to_string(change),
                                change, it);
  }

  // Final y-update makes the zeta-marginal exact, so mu sums to sum(zeta).
  log_y = log_zeta - detail::log_apply(k, log_z);
  const Vector mu = (log_z + detail::log_apply_transpose(k, log_y)).array().exp().matrix();
  if (!mu.allFinite()) throw NumericError("entropic prox produced a non-finite measure");

  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  log_y.array() += frame;
  log_z.array() -= frame;
  return EntropicProxResult{validate_simplex(mu, p.simplex_tol),
                            SinkhornScalings{std::move(log_y), std::move(log_z), all, all}, it,
                            change};
}

ProxResult prox_dispatch(const ProbabilityVector& zeta, const FunctionalSpec& spec,
                         const Vector& nu, const ProxParams& p, const ProbabilityVector* mu_prev,
                         const SinkhornScalings* warm) {
  const int n = zeta.size();
  spec.validate(n);
  if (nu.size() != n) throw ValidationError("prox_dispatch: multiplier size mismatch");

  Vector linear = nu;
  for (const auto& t : spec.terms()) {
    if (const auto* l = std::get_if<LinearTerm>(&t)) {
      linear += l->a;
    } else if (const auto* i = std::get_if<InteractionTerm>(&t)) {
      if (!mu_prev) throw ValidationError("interaction term needs the previous iterate");
      linear += 2.0 * (i->U * mu_prev->weights());
    }
  }

  if (const auto beta = spec.entropy_beta()) {
    auto r = prox_entropic(zeta, linear, *beta, p, warm);
    return ProxResult{std::move(r.mu), std::move(r.scalings), r.iterations};
  }
  return ProxResult{prox_linear(zeta, linear, p), std::nullopt, 0};
}

}  // namespace wcadmm
