#pragma once

#include <vector>

namespace refcheck {

using Vec = std::vector<double>;
/// Row-major dense matrix, mat[i][j].
using Mat = std::vector<std::vector<double>>;

}  // namespace refcheck
