#pragma once

// Domain types shared by every solver: the support set, its squared-distance
// cost, the Gibbs kernel, probability vectors, transport plans and
// multipliers. All of them are immutable once constructed.

#include <Eigen/Dense>

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace wcadmm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kDefaultSimplexTol = 1e-9;
inline constexpr double kDefaultMarginalTol = 1e-6;
/// Log-domain arithmetic is used when epsilon < max(C) / ratio.
inline constexpr double kDefaultStabilizeRatio = 50.0;

/// Uniform tensor grid: `count` points per axis on [min, max] in each of
/// `dim` axes. The last axis varies fastest.
struct GridSpec {
  int dim = 1;
  double min = 0.0;
  double max = 1.0;
  int count = 2;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// N distinct points in R^d, one per row.
class SupportSet {
 public:
  static SupportSet from_points(Matrix points);
  static SupportSet grid(const GridSpec& spec);
  /// One point per row, comma separated; a non-numeric first row is a header.
  static SupportSet from_csv(const std::filesystem::path& path);
  static SupportSet parse_csv(std::istream& in, const std::string& source);

  int dim() const { return static_cast<int>(points_.cols()); }
  int size() const { return static_cast<int>(points_.rows()); }
  const Matrix& points() const { return points_; }

  /// Relabels points: new point i is old point perm[i].
  SupportSet permuted(const std::vector<int>& perm) const;

 private:
  explicit SupportSet(Matrix points) : points_(std::move(points)) {}
  Matrix points_;
};

/// C(i,j) = |theta_i - theta_j|^2.
class CostMatrix {
 public:
  /// Accepts an arbitrary matrix after checking symmetry, zero diagonal and
  /// nonnegativity. Used for hand-built kernels in tests.
  static CostMatrix from_matrix(Matrix values);

  const Matrix& values() const { return values_; }
  int size() const { return static_cast<int>(values_.rows()); }
  double max() const { return max_; }

 private:
  friend CostMatrix build_cost_matrix(const SupportSet& support);
  explicit CostMatrix(Matrix values);
  Matrix values_;
  double max_ = 0.0;
};

CostMatrix build_cost_matrix(const SupportSet& support);

struct KernelOptions {
  double stabilize_ratio = kDefaultStabilizeRatio;
  /// Overrides the automatic choice when set.
  std::optional<bool> log_domain;
};

/// Gamma = exp(-C / (2 epsilon)), stored together with its logarithm.
class GibbsKernel {
 public:
  double epsilon() const { return epsilon_; }
  int size() const { return static_cast<int>(kernel_.rows()); }
  const Matrix& kernel() const { return kernel_; }
  const Matrix& log_kernel() const { return log_kernel_; }
  const CostMatrix& cost() const { return cost_; }
  /// True when solvers should work with log-scalings.
  bool log_domain() const { return log_domain_; }

 private:
  friend GibbsKernel build_gibbs_kernel(const CostMatrix&, double, const KernelOptions&);
  GibbsKernel(CostMatrix cost, double epsilon, const KernelOptions& options);

  CostMatrix cost_;
  double epsilon_;
  Matrix kernel_;
  Matrix log_kernel_;
  bool log_domain_;
};

GibbsKernel build_gibbs_kernel(const CostMatrix& cost, double epsilon,
                               const KernelOptions& options = {});

using KernelPtr = std::shared_ptr<const GibbsKernel>;

inline KernelPtr make_kernel(const CostMatrix& cost, double epsilon,
                             const KernelOptions& options = {}) {
  return std::make_shared<const GibbsKernel>(build_gibbs_kernel(cost, epsilon, options));
}

/// An element of the probability simplex.
class ProbabilityVector {
 public:
  static ProbabilityVector uniform(int n);

  const Vector& weights() const { return weights_; }
  int size() const { return static_cast<int>(weights_.size()); }
  double operator[](int i) const { return weights_[i]; }
  bool strictly_positive() const { return (weights_.array() > 0.0).all(); }

 private:
  friend ProbabilityVector validate_simplex(const Vector&, double);
  friend ProbabilityVector normalize(const Vector&);
  explicit ProbabilityVector(Vector w) : weights_(std::move(w)) {}
  Vector weights_;
};

/// Accepts v iff it is finite, nonnegative and |sum - 1| <= tol. Never
/// rescales.
ProbabilityVector validate_simplex(const Vector& v, double tol = kDefaultSimplexTol);

/// Opt-in renormalization: v / sum(v) for finite nonnegative v with positive
/// mass.
ProbabilityVector normalize(const Vector& v);

/// Plan M with M 1 = row marginal and M^T 1 = column marginal.
class TransportPlan {
 public:
  static TransportPlan make(Matrix matrix, ProbabilityVector row, ProbabilityVector col,
                            double tol = kDefaultMarginalTol);

  const Matrix& matrix() const { return matrix_; }
  const ProbabilityVector& row_marginal() const { return row_; }
  const ProbabilityVector& col_marginal() const { return col_; }
  /// max(|M 1 - row|_1, |M^T 1 - col|_1)
  double marginal_error() const;

 private:
  TransportPlan(Matrix m, ProbabilityVector row, ProbabilityVector col)
      : matrix_(std::move(m)), row_(std::move(row)), col_(std::move(col)) {}
  Matrix matrix_;
  ProbabilityVector row_;
  ProbabilityVector col_;
};

/// Unconstrained dual variable with finite entries.
class Multiplier {
 public:
  static Multiplier zeros(int n) { return Multiplier(Vector::Zero(n)); }
  static Multiplier from(Vector values);

  const Vector& values() const { return values_; }
  int size() const { return static_cast<int>(values_.size()); }

 private:
  explicit Multiplier(Vector v) : values_(std::move(v)) {}
  Vector values_;
};

}  // namespace wcadmm
