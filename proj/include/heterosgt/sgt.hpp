#pragma once

// Subgraph Transformer: sinusoidal encoding of first-visit positions, masked
// multi-head self-attention blocks (post-norm, ReLU feed-forward) and readout.

#include "autodiff.hpp"
#include "init.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace heterosgt::sgt {

using ad::Index;
using ad::Matrix;
using ad::Parameter;
using ad::Tape;
using ad::Var;

/// Rpe[j][2i] = sin(j / 10000^(2i/d)), Rpe[j][2i+1] = cos(j / 10000^(2i/d)),
/// j = 0 for the root.
inline Matrix relative_positional_encoding(std::size_t wl, std::size_t d) {
  if (d % 2 != 0) throw std::invalid_argument("relative_positional_encoding: d must be even");
  if (wl < 1) throw std::invalid_argument("relative_positional_encoding: wl must be at least 1");
  Matrix rpe(static_cast<Index>(wl), static_cast<Index>(d));
  for (std::size_t j = 0; j < wl; ++j) {
    for (std::size_t i = 0; i < d / 2; ++i) {
      const double angle =
          static_cast<double>(j) / std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(d));
      rpe(static_cast<Index>(j), static_cast<Index>(2 * i)) = std::sin(angle);
      rpe(static_cast<Index>(j), static_cast<Index>(2 * i + 1)) = std::cos(angle);
    }
  }
  return rpe;
}

struct AttentionHead {
  Parameter w_q, w_k, w_v;  // d x d_head
};

struct SgtLayer {
  std::vector<AttentionHead> heads;
  Parameter w_1f, b_1f;  // d x d_ff, 1 x d_ff
  Parameter w_2f, b_2f;  // d_ff x d, 1 x d
  Parameter ln1_gain, ln1_bias;
  Parameter ln2_gain, ln2_bias;

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    for (auto& h : heads) out.insert(out.end(), {&h.w_q, &h.w_k, &h.w_v});
    out.insert(out.end(), {&w_1f, &b_1f, &w_2f, &b_2f, &ln1_gain, &ln1_bias, &ln2_gain, &ln2_bias});
    return out;
  }
};

struct SgtParams {
  Index d = 0;
  Index heads = 1;
  Index d_ff = 0;
  std::vector<SgtLayer> layers;

  Index head_size() const { return d / heads; }
  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out;
    for (auto& l : layers)
      for (Parameter* p : l.parameters()) out.push_back(p);
    return out;
  }
};

inline SgtParams make_sgt(Index d, std::size_t layers, Index heads, Index d_ff, std::uint64_t seed) {
  if (heads < 1 || d % heads != 0) throw std::invalid_argument("make_sgt: d must be divisible by the head count");
  Rng rng(derive_seed(seed, "sgt"));
  SgtParams p{d, heads, d_ff, {}};
  const Index dh = d / heads;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string pre = "sgt.l" + std::to_string(l) + ".";
    SgtLayer layer;
    for (Index h = 0; h < heads; ++h) {
      const std::string hp = pre + "h" + std::to_string(h) + ".";
      layer.heads.push_back(AttentionHead{ad::fan_in_param(hp + "w_q", d, dh, d, rng),
                                          ad::fan_in_param(hp + "w_k", d, dh, d, rng),
                                          ad::fan_in_param(hp + "w_v", d, dh, d, rng)});
    }
    layer.w_1f = ad::fan_in_param(pre + "w_1f", d, d_ff, d, rng);
    layer.b_1f = ad::fan_in_param(pre + "b_1f", 1, d_ff, d, rng);
    layer.w_2f = ad::fan_in_param(pre + "w_2f", d_ff, d, d_ff, rng);
    layer.b_2f = ad::fan_in_param(pre + "b_2f", 1, d, d_ff, rng);
    layer.ln1_gain = Parameter(pre + "ln1_gain", Matrix::Ones(1, d));
    layer.ln1_bias = Parameter(pre + "ln1_bias", Matrix::Zero(1, d));
    layer.ln2_gain = Parameter(pre + "ln2_gain", Matrix::Ones(1, d));
    layer.ln2_bias = Parameter(pre + "ln2_bias", Matrix::Zero(1, d));
    p.layers.push_back(std::move(layer));
  }
  return p;
}

namespace detail {
inline void check_mask(const Var& h, std::span<const unsigned char> mask) {
  if (static_cast<Index>(mask.size()) != h.rows()) throw std::invalid_argument("mask length differs from row count");
  if (std::none_of(mask.begin(), mask.end(), [](unsigned char m) { return m != 0; }))
    throw std::invalid_argument("every position is masked");
}
}  // namespace detail

/// Concatenated head outputs softmax(Q K^T / sqrt(d_head)) V, masked columns
/// excluded. Per-head attention matrices are appended to `weights` if given.
inline Var multi_head_attention(Tape& tape, Var h, std::span<const unsigned char> mask, SgtLayer& layer,
                                std::vector<Matrix>* weights = nullptr) {
  detail::check_mask(h, mask);
  std::vector<Var> outs;
  for (auto& head : layer.heads) {
    Var q = ad::matmul(h, tape.param(head.w_q));
    Var k = ad::matmul(h, tape.param(head.w_k));
    Var v = ad::matmul(h, tape.param(head.w_v));
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    Var a = ad::softmax_rows(ad::scale(ad::matmul(q, ad::transpose(k)), scale), mask);
    if (weights) weights->push_back(a.value());
    outs.push_back(ad::matmul(a, v));
  }
  return ad::concat_cols(outs);
}

/// x = LayerNorm(H + MHA(H)); out = LayerNorm(x + FFN(x)), FFN = affine, ReLU, affine.
inline Var self_attention_block(Tape& tape, Var h, std::span<const unsigned char> mask, SgtLayer& layer,
                                std::vector<Matrix>* weights = nullptr) {
  Var attended = multi_head_attention(tape, h, mask, layer, weights);
  if (attended.cols() != h.cols()) throw std::invalid_argument("self_attention_block: head widths do not sum to d");
  Var x = ad::layer_norm(ad::add(h, attended), tape.param(layer.ln1_gain), tape.param(layer.ln1_bias));
  Var hidden = ad::relu(ad::add_row(ad::matmul(x, tape.param(layer.w_1f)), tape.param(layer.b_1f)));
  Var ffn = ad::add_row(ad::matmul(hidden, tape.param(layer.w_2f)), tape.param(layer.b_2f));
  return ad::layer_norm(ad::add(x, ffn), tape.param(layer.ln2_gain), tape.param(layer.ln2_bias));
}

/// H^0 = S + Rpe on valid rows (padding rows stay zero), then every layer.
inline Var transformer_forward(Tape& tape, Var s, std::span<const unsigned char> mask, SgtParams& params,
                               bool use_rpe, std::vector<Matrix>* weights = nullptr) {
  if (s.cols() != params.d) throw std::invalid_argument("transformer_forward: feature width differs from model width");
  if (static_cast<Index>(mask.size()) != s.rows()) throw std::invalid_argument("transformer_forward: mask length mismatch");
  Var h = s;
  if (use_rpe) {
    Matrix rpe = relative_positional_encoding(static_cast<std::size_t>(s.rows()), static_cast<std::size_t>(s.cols()));
    for (Index j = 0; j < rpe.rows(); ++j)
      if (!mask[static_cast<std::size_t>(j)]) rpe.row(j).setZero();
    h = ad::add(s, tape.constant(std::move(rpe)));
  }
  for (auto& layer : params.layers) h = self_attention_block(tape, h, mask, layer, weights);
  return h;
}

enum class Readout { First, Mean, Max };

inline Readout parse_readout(std::string_view s) {
  if (s == "first") return Readout::First;
  if (s == "mean") return Readout::Mean;
  if (s == "max") return Readout::Max;
  throw std::invalid_argument("unknown readout mode '" + std::string(s) + "'");
}

inline const char* readout_name(Readout r) {
  switch (r) {
    case Readout::First: return "first";
    case Readout::Mean: return "mean";
    case Readout::Max: return "max";
  }
  return "?";
}

/// first: row 0 (the root article); mean / max: over valid rows.
inline Var readout(Var h, std::span<const unsigned char> mask, Readout mode) {
  if (mask.empty() || !mask[0]) throw std::invalid_argument("readout: root row must be valid");
  if (mode == Readout::First) return ad::slice_rows(h, 0, 1);
  std::vector<Index> rows;
  for (std::size_t j = 0; j < mask.size(); ++j)
    if (mask[j]) rows.push_back(static_cast<Index>(j));
  Var valid = rows.size() == mask.size() ? h : ad::gather_rows(h, rows);
  return mode == Readout::Mean ? ad::mean_rows(valid) : ad::max_rows(valid);
}

}  // namespace heterosgt::sgt
