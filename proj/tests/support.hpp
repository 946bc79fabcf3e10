#pragma once

// Conversions between the library's Eigen types and the oracles' plain
// vectors, plus seeded random instances.

#include "refcheck/types.hpp"
#include "wcadmm/measures.hpp"

#include <algorithm>
#include <random>

namespace testing {

using wcadmm::Matrix;
using wcadmm::Vector;

inline refcheck::Vec to_vec(const Vector& v) { return refcheck::Vec(v.data(), v.data() + v.size()); }

inline Vector from_vec(const refcheck::Vec& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline refcheck::Mat to_mat(const Matrix& m) {
  refcheck::Mat out(m.rows(), refcheck::Vec(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }

  Vector vector(int n, double lo, double hi) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  /// Strictly positive weights bounded away from zero.
  wcadmm::ProbabilityVector simplex(int n, double floor = 0.05) {
    return wcadmm::normalize(vector(n, floor, 1.0));
  }

  /// n distinct sorted points in [lo, hi] (1D).
  wcadmm::SupportSet points_1d(int n, double lo, double hi) {
    Vector p = vector(n, lo, hi);
    std::sort(p.data(), p.data() + n);
    for (int i = 1; i < n; ++i)
      if (p[i] <= p[i - 1]) p[i] = p[i - 1] + 1e-3;
    return wcadmm::SupportSet::from_points(p);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace testing
