#pragma once

// Reference transport computations with plain loops.

#include "refcheck/types.hpp"

namespace refcheck {

inline constexpr int kMaxExactOtSize = 8;

/// Squared Euclidean distances between rows of `points`.
Mat squared_distances(const Mat& points);

/// (1/2) min <C, M> over couplings of xi and eta, by successive shortest
/// paths on the bipartite transport network. Refuses N > kMaxExactOtSize.
double exact_ot_value(const Vec& xi, const Vec& eta, const Mat& cost);

struct EntropicOtOracle {
  double value;  ///< <C/2 + eps log M, M>, 0 log 0 = 0
  Mat plan;
  int iterations;
};

/// Plain Sinkhorn, iterated until both marginal errors are below `tol`.
EntropicOtOracle entropic_ot(const Vec& xi, const Vec& eta, const Mat& cost, double eps,
                             double tol = 1e-14, int max_iter = 1000000);

/// g_i proportional to exp(-beta v_i).
Vec gibbs_vector(const Vec& v, double beta);

/// sum p log(p/q), 0 log 0 = 0.
double kl_divergence(const Vec& p, const Vec& q);

double l1_distance(const Vec& a, const Vec& b);

}  // namespace refcheck
