#pragma once

// Brute-force minimization over the probability simplex.

#include "refcheck/types.hpp"

#include <functional>

namespace refcheck {

using SimplexObjective = std::function<double(const Vec&)>;

inline constexpr int kMaxGridDim = 4;

/// Best point of the lattice {k / resolution : k in Z^n_+, sum k = resolution},
/// enumerated in descending lexicographic order of k (starting at resolution
/// e_1); ties keep the first point.
/// Refuses n > kMaxGridDim.
Vec grid_argmin(int n, int resolution, const SimplexObjective& f);

/// grid_argmin followed by a pattern search along the edge directions
/// e_i - e_j, halving the step from 1/resolution down to `final_step`.
Vec grid_argmin_refined(int n, int resolution, const SimplexObjective& f,
                        double final_step = 1e-9);

/// Number of lattice points, C(resolution + n - 1, n - 1).
long long lattice_size(int n, int resolution);

}  // namespace refcheck
