#pragma once

#include "refcheck/types.hpp"

#include <functional>

namespace refcheck {

using ScalarFunction = std::function<double(const Vec&)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h. Throws
/// std::domain_error when f is not finite at a probe point.
Vec fd_gradient(const ScalarFunction& f, const Vec& x, double h);

}  // namespace refcheck
