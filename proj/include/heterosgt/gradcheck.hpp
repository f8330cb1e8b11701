#pragma once

#include "autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace heterosgt::ad {

/// |a - b| / max(|a|, |b|, 1e-8)
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  Index worst_row = 0;
  Index worst_col = 0;
  double analytic = 0.0;
  double numeric = 0.0;

  bool passed(double tolerance = 1e-4) const { return max_rel_error < tolerance; }
};

/// Builds a scalar loss on the given tape from the current parameter values.
using Program = std::function<Var(Tape&)>;

/// Compares the tape adjoint of `param` against central differences
/// (f(x+eps) - f(x-eps)) / 2eps, entry by entry. Resets param.grad first.
inline GradCheckResult finite_diff_check(const Program& program, Parameter& param, double eps = 1e-6) {
  if (!(eps > 0.0)) throw AdError("finite_diff_check: eps must be positive");
  param.zero_grad();
  {
    Tape tape;
    Var loss = program(tape);
    tape.backward(loss);
  }
  const Matrix analytic = param.grad;

  auto evaluate = [&]() {
    Tape tape(false);
    return program(tape).scalar();
  };

  GradCheckResult result;
  for (Index i = 0; i < param.value.rows(); ++i) {
    for (Index j = 0; j < param.value.cols(); ++j) {
      const double saved = param.value(i, j);
      param.value(i, j) = saved + eps;
      const double up = evaluate();
      param.value(i, j) = saved - eps;
      const double down = evaluate();
      param.value(i, j) = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = relative_error(analytic(i, j), numeric);
      if (err > result.max_rel_error || (i == 0 && j == 0)) {
        result.max_rel_error = err;
        result.worst_row = i;
        result.worst_col = j;
        result.analytic = analytic(i, j);
        result.numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace heterosgt::ad
