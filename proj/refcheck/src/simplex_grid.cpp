#include "refcheck/simplex_grid.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace refcheck {

namespace {

void check_dim(int n) {
  if (n < 1) throw std::invalid_argument("simplex dimension must be positive");
  if (n > kMaxGridDim)
    throw std::invalid_argument("simplex grid refused for n = " + std::to_string(n) +
                                " (limit " + std::to_string(kMaxGridDim) + ")");
}

// Visits compositions of `remaining` into the slots from `slot` onward.
template <typename Visit>
void compositions(std::vector<int>& k, int slot, int remaining, Visit& visit) {
  const int n = static_cast<int>(k.size());
  if (slot == n - 1) {
    k[slot] = remaining;
    visit(k);
    return;
  }
  for (int c = remaining; c >= 0; --c) {
    k[slot] = c;
    compositions(k, slot + 1, remaining - c, visit);
  }
}

}  // namespace

long long lattice_size(int n, int resolution) {
  long long r = 1;
  for (int i = 1; i < n; ++i) r = r * (resolution + i) / i;
  return r;
}

Vec grid_argmin(int n, int resolution, const SimplexObjective& f) {
  check_dim(n);
  if (resolution < 1) throw std::invalid_argument("grid resolution must be positive");
  Vec best;
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<int> k(n, 0);
  Vec p(n);
  auto visit = [&](const std::vector<int>& comp) {
    for (int i = 0; i < n; ++i) p[i] = static_cast<double>(comp[i]) / resolution;
    const double v = f(p);
    if (v < best_value) {
      best_value = v;
      best = p;
    }
  };
  compositions(k, 0, resolution, visit);
  if (best.empty()) throw std::domain_error("objective is not finite anywhere on the grid");
  return best;
}

Vec grid_argmin_refined(int n, int resolution, const SimplexObjective& f, double final_step) {
  Vec best = grid_argmin(n, resolution, f);
  double best_value = f(best);
  double h = 1.0 / resolution;
  Vec trial(n);
  while (h >= final_step) {
    bool moved = false;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i == j || best[j] < h) continue;
        trial = best;
        trial[i] += h;
        trial[j] -= h;
        if (trial[j] < 0.0) trial[j] = 0.0;
        const double v = f(trial);
        if (v < best_value) {
          best_value = v;
          best = trial;
          moved = true;
        }
      }
    }
    if (!moved) h *= 0.5;
  }
  return best;
}

}  // namespace refcheck
