#pragma once

#include "autodiff.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace heterosgt::ad {

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One Adam update with L2 coupling (weight decay folded into the gradient).
/// Moments are created lazily on the first call and bound to the order of
/// `params`; pass the same list on every call.
inline void adam_step(std::span<Parameter* const> params, AdamState& state, double lr,
                      double weight_decay = 0.0) {
  if (!(lr > 0.0)) throw AdError("adam_step: learning rate must be positive");
  if (state.m.empty()) {
    for (const Parameter* p : params) {
      state.m.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      state.v.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state.m.size() != params.size()) throw AdError("adam_step: parameter list changed between steps");
  for (const Parameter* p : params)
    if (!p->grad.allFinite()) throw AdError("adam_step: non-finite gradient in '" + p->name + "'");

  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    Matrix g = p.grad + weight_decay * p.value;
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g.cwiseProduct(g);
    auto m_hat = state.m[i].array() / c1;
    auto v_hat = state.v[i].array() / c2;
    p.value.array() -= lr * m_hat / (v_hat.sqrt() + state.eps);
  }
}

inline void zero_grads(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->zero_grad();
}

}  // namespace heterosgt::ad
