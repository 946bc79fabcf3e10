#include "wcadmm/measures.hpp"

#include "wcadmm/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace wcadmm {

namespace {

bool parse_row(const std::string& line, std::vector<double>& out) {
  out.clear();
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    if (first == std::string::npos) return false;
    cell = cell.substr(first, last - first + 1);
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size()) return false;
    out.push_back(v);
  }
  return !out.empty();
}

}  // namespace

SupportSet SupportSet::from_points(Matrix points) {
  if (points.rows() < 1 || points.cols() < 1)
    throw ValidationError("support set needs at least one point of dimension >= 1");
  if (!points.allFinite()) throw ValidationError("support set has non-finite coordinates");
  const Eigen::Index n = points.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (points.row(i) == points.row(j))
        throw ValidationError("support points " + std::to_string(i) + " and " +
                              std::to_string(j) + " coincide");
  return SupportSet(std::move(points));
}

SupportSet SupportSet::grid(const GridSpec& spec) {
  if (spec.dim < 1) throw ValidationError("grid dim must be >= 1");
  if (spec.count < 1) throw ValidationError("grid count must be >= 1");
  if (!(spec.max > spec.min) && spec.count > 1)
    throw ValidationError("grid max must exceed grid min");
  Eigen::Index total = 1;
  for (int a = 0; a < spec.dim; ++a) total *= spec.count;
  const double step = spec.count > 1 ? (spec.max - spec.min) / (spec.count - 1) : 0.0;
  Matrix pts(total, spec.dim);
  for (Eigen::Index r = 0; r < total; ++r) {
    Eigen::Index rem = r;
    for (int a = spec.dim - 1; a >= 0; --a) {
      const auto k = rem % spec.count;
      rem /= spec.count;
      pts(r, a) = spec.count > 1 ? spec.min + step * static_cast<double>(k) : spec.min;
    }
  }
  return from_points(std::move(pts));
}

SupportSet SupportSet::parse_csv(std::istream& in, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::vector<double> row;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (!parse_row(line, row)) {
      if (rows.empty() && lineno == 1) continue;  // header
      throw ValidationError(source + ":" + std::to_string(lineno) + ": malformed row");
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValidationError(source + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(rows.front().size()) + " columns");
    rows.push_back(row);
  }
  if (rows.empty()) throw ValidationError(source + ": no points");
  Matrix pts(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) pts(i, j) = rows[i][j];
  return from_points(std::move(pts));
}

SupportSet SupportSet::from_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open support CSV " + path.string());
  return parse_csv(in, path.string());
}

SupportSet SupportSet::permuted(const std::vector<int>& perm) const {
  if (static_cast<int>(perm.size()) != size())
    throw ValidationError("permutation size does not match support");
  Matrix pts(points_.rows(), points_.cols());
  for (int i = 0; i < size(); ++i) pts.row(i) = points_.row(perm[i]);
  return from_points(std::move(pts));
}

CostMatrix::CostMatrix(Matrix values) : values_(std::move(values)) {
  max_ = values_.size() ? values_.maxCoeff() : 0.0;
}

CostMatrix CostMatrix::from_matrix(Matrix values) {
  if (values.rows() != values.cols() || values.rows() < 1)
    throw ValidationError("cost matrix must be square and non-empty");
  if (!values.allFinite()) throw ValidationError("cost matrix has non-finite entries");
  if ((values.array() < 0.0).any()) throw ValidationError("cost matrix has negative entries");
  if (values != values.transpose()) throw ValidationError("cost matrix is not symmetric");
  if ((values.diagonal().array() != 0.0).any())
    throw ValidationError("cost matrix diagonal is not zero");
  return CostMatrix(std::move(values));
}

CostMatrix build_cost_matrix(const SupportSet& support) {
  const int n = support.size();
  const Matrix& p = support.points();
  Matrix c = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d = (p.row(i) - p.row(j)).squaredNorm();
      c(i, j) = d;
      c(j, i) = d;
    }
  if (!c.allFinite()) throw ValidationError("cost matrix overflowed");
  return CostMatrix(std::move(c));
}

GibbsKernel::GibbsKernel(CostMatrix cost, double epsilon, const KernelOptions& options)
    : cost_(std::move(cost)), epsilon_(epsilon) {
  log_kernel_ = -cost_.values() / (2.0 * epsilon_);
  kernel_ = log_kernel_.array().exp().matrix();
  log_domain_ = options.log_domain.value_or(epsilon_ < cost_.max() / options.stabilize_ratio);
}

GibbsKernel build_gibbs_kernel(const CostMatrix& cost, double epsilon,
                               const KernelOptions& options) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw ParameterError("epsilon must be positive");
  if (!(options.stabilize_ratio > 0.0)) throw ParameterError("stabilize_ratio must be positive");
  return GibbsKernel(cost, epsilon, options);
}

ProbabilityVector ProbabilityVector::uniform(int n) {
  if (n < 1) throw ValidationError("probability vector needs at least one entry");
  return ProbabilityVector(Vector::Constant(n, 1.0 / n));
}

ProbabilityVector validate_simplex(const Vector& v, double tol) {
  if (v.size() < 1) throw ValidationError("probability vector is empty");
  if (!v.allFinite()) throw ValidationError("probability vector has non-finite entries");
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v[i] < 0.0)
      throw ValidationError("probability vector entry " + std::to_string(i) + " is negative");
  const double s = v.sum();
  if (std::abs(s - 1.0) > tol) {
    std::ostringstream os;
    os.precision(17);
    os << "probability vector sums to " << s << " (tolerance " << tol << ")";
    throw ValidationError(os.str());
  }
  return ProbabilityVector(v);
}

ProbabilityVector normalize(const Vector& v) {
  if (v.size() < 1) throw ValidationError("probability vector is empty");
  if (!v.allFinite()) throw ValidationError("cannot normalize non-finite vector");
  if ((v.array() < 0.0).any()) throw ValidationError("cannot normalize negative entries");
  const double s = v.sum();
  if (!(s > 0.0)) throw ValidationError("cannot normalize zero vector");
  return ProbabilityVector(v / s);
}

TransportPlan TransportPlan::make(Matrix matrix, ProbabilityVector row, ProbabilityVector col,
                                  double tol) {
  if (matrix.rows() != row.size() || matrix.cols() != col.size())
    throw ValidationError("plan shape does not match marginals");
  if (!matrix.allFinite() || (matrix.array() < 0.0).any())
    throw ValidationError("plan must be finite and nonnegative");
  TransportPlan plan(std::move(matrix), std::move(row), std::move(col));
  const double err = plan.marginal_error();
  if (err > tol)
    throw ValidationError("plan marginal error " + std::to_string(err) + " exceeds tolerance");
  return plan;
}

double TransportPlan::marginal_error() const {
  const double er = (matrix_.rowwise().sum() - row_.weights()).lpNorm<1>();
  const double ec = (matrix_.colwise().sum().transpose() - col_.weights()).lpNorm<1>();
  return std::max(er, ec);
}

Multiplier Multiplier::from(Vector values) {
  if (!values.allFinite()) throw ValidationError("multiplier has non-finite entries");
  return Multiplier(std::move(values));
}

}  // namespace wcadmm
