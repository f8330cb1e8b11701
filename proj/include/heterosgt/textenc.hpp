#pragma once

// Dual-attention article encoder: word-level BiGRU + attention pooling gives
// one vector per sentence, sentence-level BiGRU + attention pooling gives the
// article vector (2 * hidden wide).

#include "autodiff.hpp"
#include "corpus.hpp"
#include "init.hpp"
#include "rng.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace heterosgt::textenc {

using ad::Matrix;
using ad::Parameter;
using ad::Tape;
using ad::Var;

/// GRU cell parameters (Cho et al. gating):
///   z = sigmoid(x W_z + h U_z + b_z)
///   r = sigmoid(x W_r + h U_r + b_r)
///   c = tanh(x W_h + (r * h) U_h + b_h)
///   h' = (1 - z) * h + z * c
struct GruBlock {
  Parameter w_z, w_r, w_h;
  Parameter u_z, u_r, u_h;
  Parameter b_z, b_r, b_h;

  ad::Index input_size() const { return w_z.value.rows(); }
  ad::Index hidden_size() const { return u_z.value.rows(); }
  std::vector<Parameter*> parameters() { return {&w_z, &w_r, &w_h, &u_z, &u_r, &u_h, &b_z, &b_r, &b_h}; }
};

inline GruBlock make_gru(const std::string& prefix, ad::Index d_in, ad::Index d_g, Rng& rng) {
  auto p = [&](const char* n, ad::Index r, ad::Index c, ad::Index fan) {
    return ad::fan_in_param(prefix + "." + n, r, c, fan, rng);
  };
  return GruBlock{p("w_z", d_in, d_g, d_in), p("w_r", d_in, d_g, d_in), p("w_h", d_in, d_g, d_in),
                  p("u_z", d_g, d_g, d_g),   p("u_r", d_g, d_g, d_g),   p("u_h", d_g, d_g, d_g),
                  p("b_z", 1, d_g, d_in),    p("b_r", 1, d_g, d_in),    p("b_h", 1, d_g, d_in)};
}

/// Runs the recurrence from a zero state. With `reversed` the inputs are
/// consumed back to front; states are returned in input order either way.
inline Var gru_sequence(Tape& tape, GruBlock& g, Var inputs, bool reversed) {
  const ad::Index steps = inputs.rows();
  if (steps < 1) throw std::invalid_argument("gru_sequence: empty input");
  if (inputs.cols() != g.input_size()) throw std::invalid_argument("gru_sequence: input width mismatch");
  Var xz = ad::add_row(ad::matmul(inputs, tape.param(g.w_z)), tape.param(g.b_z));
  Var xr = ad::add_row(ad::matmul(inputs, tape.param(g.w_r)), tape.param(g.b_r));
  Var xh = ad::add_row(ad::matmul(inputs, tape.param(g.w_h)), tape.param(g.b_h));
  Var uz = tape.param(g.u_z), ur = tape.param(g.u_r), uh = tape.param(g.u_h);

  Var h = tape.constant(Matrix::Zero(1, g.hidden_size()));
  std::vector<Var> states(static_cast<std::size_t>(steps));
  for (ad::Index s = 0; s < steps; ++s) {
    const ad::Index t = reversed ? steps - 1 - s : s;
    Var z = ad::sigmoid(ad::add(ad::slice_rows(xz, t, 1), ad::matmul(h, uz)));
    Var r = ad::sigmoid(ad::add(ad::slice_rows(xr, t, 1), ad::matmul(h, ur)));
    Var c = ad::tanh(ad::add(ad::slice_rows(xh, t, 1), ad::matmul(ad::mul(r, h), uh)));
    h = ad::add(h, ad::mul(z, ad::sub(c, h)));
    states[static_cast<std::size_t>(t)] = h;
  }
  return ad::concat_rows(states);
}

struct AttentionParams {
  Parameter w;  // d x d
  Parameter b;  // 1 x d
  Parameter u;  // d x 1 context vector

  std::vector<Parameter*> parameters() { return {&w, &b, &u}; }
};

inline AttentionParams make_attention(const std::string& prefix, ad::Index d, Rng& rng) {
  return AttentionParams{ad::fan_in_param(prefix + ".w", d, d, d, rng), ad::fan_in_param(prefix + ".b", 1, d, d, rng),
                         ad::fan_in_param(prefix + ".u", d, 1, d, rng)};
}

struct Pooled {
  Var vector;   // 1 x d
  Var weights;  // 1 x T, sums to 1
};

/// u_t = tanh(h_t W + b); alpha = softmax_t(u_t . u); out = sum_t alpha_t h_t
inline Pooled attention_pool(Tape& tape, Var hiddens, AttentionParams& a) {
  if (hiddens.rows() < 1) throw std::invalid_argument("attention_pool: empty input");
  Var keys = ad::tanh(ad::add_row(ad::matmul(hiddens, tape.param(a.w)), tape.param(a.b)));
  Var scores = ad::transpose(ad::matmul(keys, tape.param(a.u)));
  Var weights = ad::softmax_rows(scores);
  return Pooled{ad::matmul(weights, hiddens), weights};
}

struct TextEncoderParams {
  Parameter embedding;  // |V| x d_w
  GruBlock word_fwd, word_bwd;
  AttentionParams word_attn;
  GruBlock sent_fwd, sent_bwd;
  AttentionParams sent_attn;

  ad::Index embedding_size() const { return embedding.value.cols(); }
  ad::Index hidden_size() const { return word_fwd.hidden_size(); }
  ad::Index output_size() const { return 2 * hidden_size(); }

  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out{&embedding};
    for (GruBlock* g : {&word_fwd, &word_bwd, &sent_fwd, &sent_bwd})
      for (Parameter* p : g->parameters()) out.push_back(p);
    for (AttentionParams* a : {&word_attn, &sent_attn})
      for (Parameter* p : a->parameters()) out.push_back(p);
    return out;
  }
};

/// Embedding rows are uniform in [-1, 1] (a lookup has unit fan-in); all
/// other weights use the fan-in rule.
inline TextEncoderParams make_text_encoder(std::size_t vocab_size, ad::Index d_w, ad::Index d_g, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "text-encoder"));
  TextEncoderParams p;
  p.embedding = Parameter("enc.embedding", ad::uniform_matrix(static_cast<ad::Index>(vocab_size), d_w, 1.0, rng));
  p.word_fwd = make_gru("enc.word_fwd", d_w, d_g, rng);
  p.word_bwd = make_gru("enc.word_bwd", d_w, d_g, rng);
  p.word_attn = make_attention("enc.word_attn", 2 * d_g, rng);
  p.sent_fwd = make_gru("enc.sent_fwd", 2 * d_g, d_g, rng);
  p.sent_bwd = make_gru("enc.sent_bwd", 2 * d_g, d_g, rng);
  p.sent_attn = make_attention("enc.sent_attn", 2 * d_g, rng);
  return p;
}

inline Var bigru(Tape& tape, GruBlock& fwd, GruBlock& bwd, Var inputs) {
  return ad::concat_cols({gru_sequence(tape, fwd, inputs, false), gru_sequence(tape, bwd, inputs, true)});
}

struct EncodedArticle {
  Var vector;                     // 1 x 2d_g
  std::vector<Var> word_weights;  // one 1 x T row per sentence
  Var sentence_weights;           // 1 x S
};

inline EncodedArticle encode(Tape& tape, const corpus::Document& doc, TextEncoderParams& p) {
  if (doc.sentences.empty()) throw std::invalid_argument("encode: document '" + doc.id + "' has no sentences");
  EncodedArticle out;
  std::vector<Var> sentence_vectors;
  for (const auto& s : doc.sentences) {
    if (s.empty()) throw std::invalid_argument("encode: empty sentence in document '" + doc.id + "'");
    Var words = ad::embedding(tape, p.embedding, s);
    Pooled pooled = attention_pool(tape, bigru(tape, p.word_fwd, p.word_bwd, words), p.word_attn);
    sentence_vectors.push_back(pooled.vector);
    out.word_weights.push_back(pooled.weights);
  }
  Var sentences = ad::concat_rows(sentence_vectors);
  Pooled article = attention_pool(tape, bigru(tape, p.sent_fwd, p.sent_bwd, sentences), p.sent_attn);
  out.vector = article.vector;
  out.sentence_weights = article.weights;
  return out;
}

/// Forward-only article vector (1 x 2d_g).
inline Matrix encode_article(const corpus::Document& doc, TextEncoderParams& p) {
  Tape tape(false);
  return encode(tape, doc, p).vector.value();
}

/// Article vectors for many documents, one row each.
inline Matrix encode_all(const std::vector<corpus::Document>& docs, TextEncoderParams& p) {
  Matrix out(static_cast<ad::Index>(docs.size()), p.output_size());
  for (std::size_t i = 0; i < docs.size(); ++i) out.row(static_cast<ad::Index>(i)) = encode_article(docs[i], p);
  return out;
}

}  // namespace heterosgt::textenc
