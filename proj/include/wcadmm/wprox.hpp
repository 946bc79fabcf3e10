#pragma once

// Sinkhorn-regularized Wasserstein proximal operators
//
//   prox(zeta) = argmin_{mu in simplex} W_eps(mu, zeta) + (1/alpha) G(mu)
//
// for the functional families the consensus solver supports.

#include "wcadmm/entropic_ot.hpp"
#include "wcadmm/measures.hpp"

#include <functional>
#include <optional>
#include <variant>
#include <vector>

namespace wcadmm {

struct ProxParams {
  double alpha = 1.0;
  KernelPtr kernel;
  /// Block-coordinate stopping rule: max change of log y, log z.
  double tol = 1e-10;
  int max_iter = 200000;
  bool allow_zeros = false;
  double simplex_tol = kDefaultSimplexTol;
};

void validate(const ProxParams& p);

/// <a, mu>, e.g. a potential energy sampled on the support.
struct LinearTerm {
  Vector a;
};
/// beta^{-1} <log mu, mu>
struct EntropyTerm {
  double beta;
};
/// <U mu, mu> with U symmetric positive definite.
struct InteractionTerm {
  Matrix U;
};

using FunctionalTerm = std::variant<LinearTerm, EntropyTerm, InteractionTerm>;

/// A single term or a sum of terms.
class FunctionalSpec {
 public:
  static FunctionalSpec linear(Vector a);
  static FunctionalSpec entropy(double beta);
  static FunctionalSpec interaction(Matrix U);
  static FunctionalSpec sum(const std::vector<FunctionalSpec>& parts);

  const std::vector<FunctionalTerm>& terms() const { return terms_; }

  /// Throws ValidationError for malformed terms and UnsupportedError for
  /// compositions without a prox recipe (two entropies, interaction plus
  /// entropy).
  void validate(int n) const;

  std::optional<double> entropy_beta() const;
  bool has_interaction() const;

  /// F(mu), with 0 log 0 = 0.
  double evaluate(const Vector& mu) const;

 private:
  std::vector<FunctionalTerm> terms_;
};

/// exp(-a/(alpha eps)) .* (Gamma^T (zeta ./ (Gamma exp(-a/(alpha eps)))))
ProbabilityVector prox_linear(const ProbabilityVector& zeta, const Vector& a, const ProxParams& p);

struct EntropicProxResult {
  ProbabilityVector mu;
  SinkhornScalings scalings;
  int iterations;
  double last_change;
};

/// Called once per block iteration with the current log-scalings.
using BlockObserver = std::function<void(int, const Vector& log_y, const Vector& log_z)>;

/// Prox of G(mu) = beta^{-1} <log mu, mu> + <nu, mu>, solved by alternating
///   y <- zeta ./ (Gamma z)
///   z <- (exp(-beta nu - 1) ./ (Gamma^T y))^(1/(1 + beta alpha eps))
/// in the positive cone; mu = z .* (Gamma^T y).
EntropicProxResult prox_entropic(const ProbabilityVector& zeta, const Vector& nu, double beta,
                                 const ProxParams& p, const SinkhornScalings* warm = nullptr,
                                 const BlockObserver& observer = {});

struct ProxResult {
  ProbabilityVector mu;
  /// Present when the entropic block iteration ran; reusable as a warm start.
  std::optional<SinkhornScalings> scalings;
  int iterations = 0;
};

/// Routes prox of (1/alpha)(F + <nu, .>) to the matching solver. Interaction
/// terms are linearized at mu_prev (gradient 2 U mu_prev).
ProxResult prox_dispatch(const ProbabilityVector& zeta, const FunctionalSpec& spec,
                         const Vector& nu, const ProxParams& p,
                         const ProbabilityVector* mu_prev = nullptr,
                         const SinkhornScalings* warm = nullptr);

}  // namespace wcadmm
