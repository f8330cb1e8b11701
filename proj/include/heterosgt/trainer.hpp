#pragma once

// Dataset splitting, the MLP head and loss, two-phase training (encoder
// pretraining, then the subgraph Transformer over fixed walks) and evaluation.

#include "autodiff.hpp"
#include "corpus.hpp"
#include "hgraph.hpp"
#include "init.hpp"
#include "metrics.hpp"
#include "optim.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "sgt.hpp"
#include "textenc.hpp"
#include "topics.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace heterosgt::trainer {

using ad::Index;
using ad::Matrix;
using ad::Parameter;
using ad::Tape;
using ad::Var;

class TrainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Ablation { None, NoHg, NoEt, NoE, NoT };

inline Ablation parse_ablation(std::string_view s) {
  if (s == "none") return Ablation::None;
  if (s == "no_hg") return Ablation::NoHg;
  if (s == "no_et") return Ablation::NoEt;
  if (s == "no_e") return Ablation::NoE;
  if (s == "no_t") return Ablation::NoT;
  throw std::invalid_argument("unknown ablation '" + std::string(s) + "'");
}

inline const char* ablation_name(Ablation a) {
  switch (a) {
    case Ablation::None: return "none";
    case Ablation::NoHg: return "no_hg";
    case Ablation::NoEt: return "no_et";
    case Ablation::NoE: return "no_e";
    case Ablation::NoT: return "no_t";
  }
  return "?";
}

struct TrainConfig {
  // Sampling and graph
  std::size_t wl = 11;
  double r = 0.1;
  std::size_t lambda_t = 3;
  int k = 50;
  hgraph::PairBaseline edge_pairs = hgraph::PairBaseline::Sharing;
  hgraph::TopicRule edge_topic = hgraph::TopicRule::Top1;
  // Model
  std::size_t layers = 5;
  Index heads = 4;
  Index d = 600;
  Index d_w = 128;
  Index d_ff = 0;   // 0 = 4d
  Index d_hid = 0;  // 0 = d / 2
  sgt::Readout readout = sgt::Readout::First;
  bool use_rpe = true;
  bool mlp_relu = true;
  Ablation ablation = Ablation::None;
  // Optimization
  double lr = 5e-5;
  double weight_decay = 5e-3;
  std::size_t epochs = 100;
  std::size_t pretrain_epochs = 10;
  double pretrain_lr = 5e-5;
  std::size_t batch_size = 32;
  std::size_t patience = 20;
  bool resample_walks = false;
  bool joint = false;
  std::array<double, 3> split{0.8, 0.1, 0.1};
  std::uint64_t seed = 1;
  // Corpus and topics
  std::size_t min_freq = 2;
  std::size_t max_sentences = 0;
  std::size_t max_tokens = 0;
  double lda_alpha = 0.0;  // 0 = 50 / k
  double lda_beta = 0.01;
  int lda_iterations = 200;

  Index hidden_size() const { return d / 2; }
  Index ffn_size() const { return d_ff > 0 ? d_ff : 4 * d; }
  Index mlp_hidden() const { return d_hid > 0 ? d_hid : d / 2; }
  double alpha() const { return lda_alpha > 0.0 ? lda_alpha : 50.0 / static_cast<double>(k); }

  hgraph::EdgeRules edge_rules() const {
    hgraph::EdgeRules rules{edge_pairs, edge_topic, true, true};
    if (ablation == Ablation::NoEt || ablation == Ablation::NoE) rules.include_entities = false;
    if (ablation == Ablation::NoEt || ablation == Ablation::NoT) rules.include_topics = false;
    return rules;
  }

  void validate() const {
    auto fail = [](const std::string& why) { throw std::invalid_argument("invalid config: " + why); };
    if (std::abs(split[0] + split[1] + split[2] - 1.0) > 1e-9) fail("split ratios must sum to 1");
    for (double s : split)
      if (!(s > 0.0)) fail("split ratios must be positive");
    if (wl < 1) fail("wl must be at least 1");
    if (!(r >= 0.0 && r <= 1.0)) fail("r must lie in [0, 1]");
    if (d < 2 || d % 2 != 0) fail("d must be even");
    if (heads < 1 || d % heads != 0) fail("d must be divisible by heads");
    if (d_w < 1) fail("d_w must be positive");
    if (k < 1) fail("k must be at least 1");
    if (lambda_t < 1 || lambda_t > static_cast<std::size_t>(k)) fail("lambda_t must lie in [1, k]");
    if (!(lr > 0.0) || !(pretrain_lr > 0.0)) fail("learning rates must be positive");
    if (weight_decay < 0.0) fail("weight_decay must be non-negative");
    if (batch_size < 1) fail("batch_size must be at least 1");
    if (lda_iterations < 1) fail("lda_iterations must be at least 1");
    if (!(lda_beta > 0.0) || lda_alpha < 0.0) fail("LDA priors must be positive");
  }
};

// ---------------------------------------------------------------------------
// Splits

struct Split {
  std::vector<std::size_t> train, val, test;
};

/// Shuffled indices 0..n-1 cut into floor(r0 n), floor(r1 n) and the remainder.
inline Split split_dataset(std::size_t n, const std::array<double, 3>& ratios, std::uint64_t seed) {
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9)
    throw std::invalid_argument("split_dataset: ratios must sum to 1");
  if (n < 10) throw std::invalid_argument("split_dataset: need at least 10 labeled articles");
  const auto n_train = static_cast<std::size_t>(std::floor(ratios[0] * static_cast<double>(n) + 1e-9));
  const auto n_val = static_cast<std::size_t>(std::floor(ratios[1] * static_cast<double>(n) + 1e-9));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
    throw std::invalid_argument("split_dataset: " + std::to_string(n) + " items leave an empty split");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, "split"));
  shuffle_in_place(order, rng);
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  return s;
}

// ---------------------------------------------------------------------------
// Head and loss

struct MlpParams {
  Parameter w1, b1;  // d x d_hid, 1 x d_hid
  Parameter w2, b2;  // d_hid x 2, 1 x 2

  std::vector<Parameter*> parameters() { return {&w1, &b1, &w2, &b2}; }
};

/// softmax(h W + b): the pretraining head.
struct LinearHead {
  Parameter w, b;  // d x 2, 1 x 2

  std::vector<Parameter*> parameters() { return {&w, &b}; }
};

inline MlpParams make_mlp(const std::string& prefix, Index d, Index d_hid, std::uint64_t seed) {
  Rng rng(derive_seed(seed, prefix));
  return MlpParams{ad::fan_in_param(prefix + ".w1", d, d_hid, d, rng), ad::fan_in_param(prefix + ".b1", 1, d_hid, d, rng),
                   ad::fan_in_param(prefix + ".w2", d_hid, 2, d_hid, rng),
                   ad::fan_in_param(prefix + ".b2", 1, 2, d_hid, rng)};
}

/// softmax(act(h W1 + b1) W2 + b2) row-wise; act is ReLU, or the identity
/// when `relu` is false. `h` is B x d, the result B x 2.
inline Var classify(Tape& tape, Var h, MlpParams& mlp, bool relu = true) {
  Var hidden = ad::add_row(ad::matmul(h, tape.param(mlp.w1)), tape.param(mlp.b1));
  if (relu) hidden = ad::relu(hidden);
  return ad::softmax_rows(ad::add_row(ad::matmul(hidden, tape.param(mlp.w2)), tape.param(mlp.b2)));
}

inline constexpr double kProbFloor = 1e-12;

/// Mean over rows of -log p(y_i), probabilities clamped at 1e-12.
inline Var cross_entropy(Tape& tape, Var probs, std::span<const int> labels) {
  if (labels.empty()) throw std::invalid_argument("cross_entropy: empty batch");
  if (probs.rows() != static_cast<Index>(labels.size()) || probs.cols() != 2)
    throw std::invalid_argument("cross_entropy: probabilities must be one length-2 row per label");
  Matrix onehot = Matrix::Zero(probs.rows(), 2);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("cross_entropy: labels must be 0 or 1");
    onehot(static_cast<Index>(i), labels[i]) = 1.0;
  }
  Var picked = ad::sum(ad::mul(ad::log(probs, kProbFloor), tape.constant(std::move(onehot))));
  return ad::scale(picked, -1.0 / static_cast<double>(labels.size()));
}

// ---------------------------------------------------------------------------
// Model

struct Model {
  textenc::TextEncoderParams encoder;
  LinearHead aux;
  sgt::SgtParams sgt;
  MlpParams mlp;

  std::vector<Parameter*> head_parameters() {
    std::vector<Parameter*> out = sgt.parameters();
    for (Parameter* p : mlp.parameters()) out.push_back(p);
    return out;
  }
  std::vector<Parameter*> pretrain_parameters() {
    std::vector<Parameter*> out = encoder.parameters();
    for (Parameter* p : aux.parameters()) out.push_back(p);
    return out;
  }
  std::vector<Parameter*> parameters() {
    std::vector<Parameter*> out = pretrain_parameters();
    for (Parameter* p : head_parameters()) out.push_back(p);
    return out;
  }
};

inline Var aux_classify(Tape& tape, Var h, LinearHead& aux) {
  return ad::softmax_rows(ad::add_row(ad::matmul(h, tape.param(aux.w)), tape.param(aux.b)));
}

inline Model make_model(std::size_t vocab_size, const TrainConfig& cfg) {
  Model m;
  m.encoder = textenc::make_text_encoder(vocab_size, cfg.d_w, cfg.hidden_size(), derive_seed(cfg.seed, "model"));
  Rng rng(derive_seed(cfg.seed, "aux"));
  m.aux.w = ad::fan_in_param("aux.w", cfg.d, 2, cfg.d, rng);
  m.aux.b = ad::fan_in_param("aux.b", 1, 2, cfg.d, rng);
  m.sgt = sgt::make_sgt(cfg.d, cfg.layers, cfg.heads, cfg.ffn_size(), derive_seed(cfg.seed, "model"));
  m.mlp = make_mlp("mlp", cfg.d, cfg.mlp_hidden(), derive_seed(cfg.seed, "model"));
  return m;
}

// ---------------------------------------------------------------------------
// Data preparation

struct Dataset {
  corpus::AnnotatedCorpus corpus;
  std::vector<std::size_t> labeled;  // document indices with a label
  Split split;                       // document indices
  std::optional<topics::TopicModel> lda;
  std::vector<topics::TopicDistribution> thetas;

  int label(std::size_t doc) const { return *corpus.docs[doc].label; }
  const std::vector<std::size_t>& part(std::string_view name) const {
    if (name == "train") return split.train;
    if (name == "val") return split.val;
    if (name == "test") return split.test;
    if (name == "all") return labeled;
    throw std::invalid_argument("unknown split '" + std::string(name) + "'");
  }
};

/// Annotates, splits the labeled articles and fits the topic model on every
/// article (the graph is transductive). No topic model is fitted for no_hg.
inline Dataset prepare_dataset(const std::vector<corpus::RawArticle>& articles, const TrainConfig& cfg) {
  cfg.validate();
  Dataset ds;
  ds.corpus = corpus::annotate_corpus(articles, cfg.min_freq, {cfg.max_sentences, cfg.max_tokens});
  for (std::size_t i = 0; i < ds.corpus.docs.size(); ++i) {
    if (ds.corpus.docs[i].label) ds.labeled.push_back(i);
    if (ds.corpus.docs[i].sentences.empty())
      throw TrainError("article '" + ds.corpus.docs[i].id + "' has no tokens after preprocessing");
  }
  if (ds.labeled.empty()) throw TrainError("corpus has no labeled articles");
  Split s = split_dataset(ds.labeled.size(), cfg.split, cfg.seed);
  for (auto* part : {&s.train, &s.val, &s.test})
    for (auto& i : *part) i = ds.labeled[i];
  ds.split = std::move(s);
  if (cfg.ablation != Ablation::NoHg) {
    ds.lda = topics::fit_lda(ds.corpus.docs, ds.corpus.vocab.size(), cfg.k, cfg.alpha(), cfg.lda_beta,
                             cfg.lda_iterations, derive_seed(cfg.seed, "topics"));
    ds.thetas = ds.lda->thetas();
  }
  return ds;
}

struct GraphContext {
  hgraph::HeteroGraph graph;
  std::size_t empty_entities = 0;
  std::vector<sampler::RwrSequence> walks;  // fixed walk per news node
};

inline hgraph::HeteroGraph build_hetero_graph(const Dataset& ds, const TrainConfig& cfg) {
  if (!ds.lda) throw TrainError("graph requested without a topic model");
  return hgraph::build_graph(ds.corpus.docs, ds.corpus.entities.size(), ds.thetas, cfg.lambda_t, cfg.edge_rules());
}

/// Per-column z-scores over the rows; constant columns become zero.
inline void standardize_columns(Matrix& x) {
  if (x.rows() < 2) return;
  for (Index j = 0; j < x.cols(); ++j) {
    const double mu = x.col(j).mean();
    const double sd = std::sqrt((x.col(j).array() - mu).square().mean());
    x.col(j).array() -= mu;
    if (sd > 1e-12) x.col(j) /= sd;
  }
}

inline Matrix article_vectors(const Dataset& ds, Model& m) {
  Matrix x = textenc::encode_all(ds.corpus.docs, m.encoder);
  standardize_columns(x);
  return x;
}

inline void refresh_features(GraphContext& ctx, const Dataset& ds, Model& m) {
  const Matrix vectors = article_vectors(ds, m);
  auto entity_tokens = hgraph::entity_token_ids(ds.corpus.entities, ds.corpus.vocab);
  if (ctx.graph.count(hgraph::NodeKind::Entity) == 0) entity_tokens.clear();
  auto topic_words =
      ctx.graph.count(hgraph::NodeKind::Topic) ? hgraph::topic_word_ids(*ds.lda) : std::vector<std::vector<int>>{};
  auto table = hgraph::node_features(ctx.graph, vectors, m.encoder.embedding.value, entity_tokens, topic_words);
  ctx.empty_entities = table.empty_entities;
  ctx.graph.set_features(std::move(table.features));
}

inline GraphContext build_context(const Dataset& ds, Model& m, const TrainConfig& cfg) {
  GraphContext ctx;
  ctx.graph = build_hetero_graph(ds, cfg);
  refresh_features(ctx, ds, m);
  for (std::size_t i = 0; i < ds.corpus.docs.size(); ++i)
    ctx.walks.push_back(sampler::sample_subgraph(ctx.graph, hgraph::news(i), cfg.wl, cfg.r,
                                                 sampler::walk_seed(cfg.seed, i, 0)));
  return ctx;
}

// ---------------------------------------------------------------------------
// Forward passes

struct EpochRecord {
  std::string phase;  // "pretrain" or "train"
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double val_f1 = 0.0;
  double val_loss = 0.0;
};

class Runner {
 public:
  Runner(Dataset& ds, Model& m, const TrainConfig& cfg) : ds_(ds), m_(m), cfg_(cfg) {
    if (cfg_.ablation != Ablation::NoHg) ctx_ = build_context(ds_, m_, cfg_);
  }

  const GraphContext* context() const { return ctx_ ? &*ctx_ : nullptr; }
  GraphContext* context() { return ctx_ ? &*ctx_ : nullptr; }

  /// B x d subgraph (or article) representations for `docs`. `epoch` selects
  /// resampled walks; pass nullopt for the fixed walks.
  Var represent(Tape& tape, std::span<const std::size_t> docs, std::optional<std::size_t> epoch) {
    std::map<std::size_t, Var> encoded;
    auto article = [&](std::size_t doc) -> Var {
      if (!cfg_.joint) return tape.constant(article_vector(doc));
      auto it = encoded.find(doc);
      if (it != encoded.end()) return it->second;
      Var v = textenc::encode(tape, ds_.corpus.docs[doc], m_.encoder).vector;
      encoded.emplace(doc, v);
      return v;
    };
    std::vector<Var> rows;
    for (std::size_t doc : docs) {
      if (!ctx_) {
        rows.push_back(article(doc));
        continue;
      }
      sampler::RwrSequence walk = ctx_->walks[doc];
      if (cfg_.resample_walks && epoch)
        walk = sampler::sample_subgraph(ctx_->graph, hgraph::news(doc), cfg_.wl, cfg_.r,
                                        sampler::walk_seed(cfg_.seed, doc, *epoch + 1));
      sampler::SequenceMatrix sm = sampler::sequence_matrix(ctx_->graph, walk);
      Var s;
      if (cfg_.joint) {
        std::vector<Var> parts;
        for (std::size_t j = 0; j < walk.nodes.size(); ++j) {
          const auto& node = walk.nodes[j];
          parts.push_back(node.kind == hgraph::NodeKind::News ? article(node.index)
                                                              : tape.constant(sm.values.row(static_cast<Index>(j))));
        }
        if (walk.nodes.size() < cfg_.wl)
          parts.push_back(tape.constant(Matrix::Zero(static_cast<Index>(cfg_.wl - walk.nodes.size()), cfg_.d)));
        s = ad::concat_rows(parts);
      } else {
        s = tape.constant(std::move(sm.values));
      }
      Var h = sgt::transformer_forward(tape, s, sm.mask, m_.sgt, cfg_.use_rpe);
      rows.push_back(sgt::readout(h, sm.mask, cfg_.readout));
    }
    return ad::concat_rows(rows);
  }

  /// Probability of the fake class for each document, using fixed walks.
  std::vector<double> predict(std::span<const std::size_t> docs) {
    std::vector<double> out;
    for (std::size_t start = 0; start < docs.size(); start += cfg_.batch_size) {
      const std::size_t n = std::min(cfg_.batch_size, docs.size() - start);
      Tape tape(false);
      Var probs = classify(tape, represent(tape, docs.subspan(start, n), std::nullopt), m_.mlp, cfg_.mlp_relu);
      for (Index i = 0; i < probs.rows(); ++i) out.push_back(probs.value()(i, 1));
    }
    return out;
  }

  metrics::Metrics evaluate(std::span<const std::size_t> docs) {
    return metrics::evaluate(predict(docs), labels(docs));
  }

  struct Score {
    metrics::Metrics metrics;
    double loss = 0.0;
  };

  /// Metrics and mean cross-entropy from one prediction pass.
  Score score(std::span<const std::size_t> docs) {
    const auto p = predict(docs);
    const auto y = labels(docs);
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) total -= std::log(std::max(y[i] == 1 ? p[i] : 1.0 - p[i], kProbFloor));
    return {metrics::evaluate(p, y), total / static_cast<double>(p.size())};
  }

  double mean_loss(std::span<const std::size_t> docs) { return score(docs).loss; }

  std::vector<int> labels(std::span<const std::size_t> docs) const {
    std::vector<int> y;
    for (std::size_t d : docs) y.push_back(ds_.label(d));
    return y;
  }

  /// Phase 2. Returns the epoch with the best validation macro-F1, ties going
  /// to the lower validation loss (0 when no training took place); the model
  /// is left at that epoch's parameters.
  std::size_t fit(std::vector<EpochRecord>& history) {
    std::vector<Parameter*> params = m_.head_parameters();
    if (cfg_.joint)
      for (Parameter* p : m_.encoder.parameters()) params.push_back(p);
    ad::AdamState adam;
    std::vector<Matrix> best = snapshot(params);
    double best_f1 = -1.0;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;
    for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
      auto order = ds_.split.train;
      Rng rng(derive_seed(cfg_.seed, {hash_tag("shuffle"), epoch}));
      shuffle_in_place(order, rng);
      for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
        const std::size_t n = std::min(cfg_.batch_size, order.size() - start);
        std::span<const std::size_t> batch(order.data() + start, n);
        Tape tape;
        Var probs = classify(tape, represent(tape, batch, epoch), m_.mlp, cfg_.mlp_relu);
        const auto y = labels(batch);
        tape.backward(cross_entropy(tape, probs, y));
        ad::adam_step(params, adam, cfg_.lr, cfg_.weight_decay);
        ad::zero_grads(params);
      }
      if (cfg_.joint && ctx_) refresh_features(*ctx_, ds_, m_);
      const auto tr = score(ds_.split.train);
      const auto [val, val_loss] = score(ds_.split.val);
      history.push_back(
          {"train", epoch + 1, tr.loss, tr.metrics.accuracy, val.accuracy, val.macro_f1, val_loss});
      if (val.macro_f1 > best_f1 || (val.macro_f1 == best_f1 && val_loss < best_loss)) {
        best_f1 = val.macro_f1;
        best_loss = val_loss;
        best_epoch = epoch + 1;
        best = snapshot(params);
      } else if (epoch + 1 - best_epoch >= cfg_.patience) {
        break;
      }
    }
    restore(params, best);
    if (cfg_.joint && ctx_) refresh_features(*ctx_, ds_, m_);
    return best_epoch;
  }

 private:
  Matrix article_vector(std::size_t doc) {
    if (ctx_) return ctx_->graph.feature(hgraph::news(doc));
    if (vectors_.rows() == 0) vectors_ = article_vectors(ds_, m_);
    return vectors_.row(static_cast<Index>(doc));
  }

  static std::vector<Matrix> snapshot(const std::vector<Parameter*>& params) {
    std::vector<Matrix> out;
    for (const Parameter* p : params) out.push_back(p->value);
    return out;
  }
  static void restore(const std::vector<Parameter*>& params, const std::vector<Matrix>& values) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
  }

  Dataset& ds_;
  Model& m_;
  const TrainConfig& cfg_;
  std::optional<GraphContext> ctx_;
  Matrix vectors_;
};

/// Phase 1: encoder plus the linear auxiliary head on the training split.
inline void pretrain_encoder(Dataset& ds, Model& m, const TrainConfig& cfg, std::vector<EpochRecord>& history) {
  auto params = m.pretrain_parameters();
  ad::AdamState adam;
  auto run = [&](std::span<const std::size_t> docs, Tape& tape) {
    std::vector<Var> rows;
    for (std::size_t d : docs) rows.push_back(textenc::encode(tape, ds.corpus.docs[d], m.encoder).vector);
    return aux_classify(tape, ad::concat_rows(rows), m.aux);
  };
  auto loss_and_metrics = [&](std::span<const std::size_t> docs, double& loss) {
    Tape tape(false);
    Var probs = run(docs, tape);
    std::vector<double> p;
    std::vector<int> y;
    loss = 0.0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      y.push_back(ds.label(docs[i]));
      p.push_back(probs.value()(static_cast<Index>(i), 1));
      loss -= std::log(std::max(probs.value()(static_cast<Index>(i), y.back()), kProbFloor));
    }
    loss /= static_cast<double>(docs.size());
    return metrics::evaluate(p, y);
  };
  for (std::size_t epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    auto order = ds.split.train;
    Rng rng(derive_seed(cfg.seed, {hash_tag("pretrain-shuffle"), epoch}));
    shuffle_in_place(order, rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      std::span<const std::size_t> batch(order.data() + start, n);
      Tape tape;
      Var probs = run(batch, tape);
      std::vector<int> y;
      for (std::size_t d : batch) y.push_back(ds.label(d));
      tape.backward(cross_entropy(tape, probs, y));
      ad::adam_step(params, adam, cfg.pretrain_lr, cfg.weight_decay);
      ad::zero_grads(params);
    }
    double train_loss = 0.0, val_loss = 0.0;
    const auto tr = loss_and_metrics(ds.split.train, train_loss);
    const auto val = loss_and_metrics(ds.split.val, val_loss);
    history.push_back({"pretrain", epoch + 1, train_loss, tr.accuracy, val.accuracy, val.macro_f1, val_loss});
  }
}

// ---------------------------------------------------------------------------
// Full pipeline

struct SplitMetrics {
  std::string split;
  metrics::Metrics metrics;
};

struct TrainResult {
  Dataset dataset;
  Model model;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  std::vector<SplitMetrics> evaluation;  // train, val, test, all
  std::optional<hgraph::HeteroGraph> graph;
  std::size_t empty_entities = 0;

  const metrics::Metrics& split_metrics(std::string_view name) const {
    for (const auto& s : evaluation)
      if (s.split == name) return s.metrics;
    throw std::invalid_argument("no metrics for split '" + std::string(name) + "'");
  }
};

using ModelHook = std::function<void(Model&)>;

/// Phase 1 (skipped when joint or pretrain_epochs = 0), graph and walks, then
/// phase 2 with early stopping. `after_init` may overwrite the fresh model,
/// e.g. with checkpointed weights, in which case `train_model` = false evaluates
/// it as is.
inline TrainResult run_pipeline(const std::vector<corpus::RawArticle>& articles, const TrainConfig& cfg,
                                bool train_model = true, const ModelHook& after_init = {}) {
  TrainResult res;
  res.dataset = prepare_dataset(articles, cfg);
  res.model = make_model(res.dataset.corpus.vocab.size(), cfg);
  if (after_init) after_init(res.model);
  if (train_model && !cfg.joint) pretrain_encoder(res.dataset, res.model, cfg, res.history);
  Runner runner(res.dataset, res.model, cfg);
  if (train_model) res.best_epoch = runner.fit(res.history);
  for (const char* name : {"train", "val", "test", "all"})
    res.evaluation.push_back({name, runner.evaluate(res.dataset.part(name))});
  if (const GraphContext* ctx = runner.context()) {
    res.graph = ctx->graph;
    res.empty_entities = ctx->empty_entities;
  }
  return res;
}

inline TrainResult train(const std::vector<corpus::RawArticle>& articles, const TrainConfig& cfg) {
  return run_pipeline(articles, cfg, true);
}

}  // namespace heterosgt::trainer
