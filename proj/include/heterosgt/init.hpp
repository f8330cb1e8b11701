#pragma once

#include "autodiff.hpp"
#include "rng.hpp"

#include <cmath>
#include <string>

namespace heterosgt::ad {

inline Matrix uniform_matrix(Index rows, Index cols, double bound, Rng& rng) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = uniform_real(rng, -bound, bound);
  return m;
}

/// Weight initialised uniformly in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
inline Parameter fan_in_param(std::string name, Index rows, Index cols, Index fan_in, Rng& rng) {
  return Parameter(std::move(name), uniform_matrix(rows, cols, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng));
}

}  // namespace heterosgt::ad
