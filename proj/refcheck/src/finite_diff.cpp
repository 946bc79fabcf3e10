#include "refcheck/finite_diff.hpp"

#include <cmath>
#include <stdexcept>

namespace refcheck {

Vec fd_gradient(const ScalarFunction& f, const Vec& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  Vec g(x.size());
  Vec probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::domain_error("function is not finite near the evaluation point");
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace refcheck
