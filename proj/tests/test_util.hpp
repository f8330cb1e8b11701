#pragma once

#include <heterosgt/autodiff.hpp>
#include <heterosgt/gradcheck.hpp>
#include <heterosgt/rng.hpp>

#include <cmath>
#include <vector>

namespace heterosgt::testing {

inline ad::Matrix random_matrix(ad::Index r, ad::Index c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  ad::Matrix m(r, c);
  for (ad::Index i = 0; i < r; ++i)
    for (ad::Index j = 0; j < c; ++j) m(i, j) = uniform_real(rng, lo, hi);
  return m;
}

/// Entries with |x| in [0.2, 1] and random sign, away from kinks at zero.
inline ad::Matrix away_from_zero(ad::Index r, ad::Index c, Rng& rng) {
  ad::Matrix m = random_matrix(r, c, rng, 0.2, 1.0);
  for (ad::Index i = 0; i < r; ++i)
    for (ad::Index j = 0; j < c; ++j)
      if (uniform01(rng) < 0.5) m(i, j) = -m(i, j);
  return m;
}

/// Redraws every parameter uniformly in [-bound, bound].
inline void randomize(const std::vector<ad::Parameter*>& params, Rng& rng, double bound = 1.0) {
  for (ad::Parameter* p : params) p->value = random_matrix(p->value.rows(), p->value.cols(), rng, -bound, bound);
}

/// sum(w .* y) with a fixed random weight matrix: a scalar probe of y that
/// exercises every output entry.
inline ad::Var probe(ad::Var y, std::uint64_t seed) {
  Rng rng(seed);
  return ad::sum(ad::mul(y, y.tape()->constant(random_matrix(y.rows(), y.cols(), rng))));
}

}  // namespace heterosgt::testing
