#pragma once

// Latent Dirichlet Allocation fitted by collapsed Gibbs sampling, with
// fold-in inference for unseen documents, held-out perplexity and UMass
// coherence.

#include "corpus.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

namespace heterosgt::topics {

class TopicError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using TokenDoc = std::vector<int>;
using TopicDistribution = std::vector<double>;

/// Bag of tokens per document with the unknown id removed.
inline std::vector<TokenDoc> token_docs(const std::vector<corpus::Document>& docs) {
  std::vector<TokenDoc> out;
  out.reserve(docs.size());
  for (const auto& d : docs) {
    TokenDoc t;
    for (const auto& s : d.sentences)
      for (int w : s)
        if (w != corpus::Vocabulary::kUnknown) t.push_back(w);
    out.push_back(std::move(t));
  }
  return out;
}

struct TopicModel {
  int k = 1;
  double alpha = 1.0;
  double beta = 0.01;
  std::size_t vocab_size = 0;
  std::vector<long> word_topic;   // k x vocab_size, row-major by topic
  std::vector<long> doc_topic;    // docs x k
  std::vector<long> topic_totals; // k
  std::vector<TokenDoc> docs;
  std::vector<std::vector<int>> assignments;
  std::uint64_t seed = 0;

  long& wt(int t, int w) { return word_topic[static_cast<std::size_t>(t) * vocab_size + static_cast<std::size_t>(w)]; }
  long wt(int t, int w) const {
    return word_topic[static_cast<std::size_t>(t) * vocab_size + static_cast<std::size_t>(w)];
  }
  long& dt(std::size_t d, int t) { return doc_topic[d * static_cast<std::size_t>(k) + static_cast<std::size_t>(t)]; }
  long dt(std::size_t d, int t) const { return doc_topic[d * static_cast<std::size_t>(k) + static_cast<std::size_t>(t)]; }

  /// p(w | t) with Dirichlet smoothing. Ids outside the vocabulary get the
  /// smoothing mass only.
  double phi(int t, int w) const {
    const long c = (w >= 0 && static_cast<std::size_t>(w) < vocab_size) ? wt(t, w) : 0;
    return (static_cast<double>(c) + beta) /
           (static_cast<double>(topic_totals[static_cast<std::size_t>(t)]) + beta * static_cast<double>(vocab_size));
  }

  /// Topic mixture of training document d.
  TopicDistribution theta(std::size_t d) const {
    TopicDistribution out(static_cast<std::size_t>(k));
    const double n = static_cast<double>(docs[d].size());
    for (int t = 0; t < k; ++t)
      out[static_cast<std::size_t>(t)] = (static_cast<double>(dt(d, t)) + alpha) / (n + k * alpha);
    return out;
  }

  std::vector<TopicDistribution> thetas() const {
    std::vector<TopicDistribution> out;
    for (std::size_t d = 0; d < docs.size(); ++d) out.push_back(theta(d));
    return out;
  }

  /// Recomputes every count from the assignments and compares.
  bool consistent() const {
    std::vector<long> w(word_topic.size(), 0), dtc(doc_topic.size(), 0), tot(static_cast<std::size_t>(k), 0);
    for (std::size_t d = 0; d < docs.size(); ++d) {
      if (assignments[d].size() != docs[d].size()) return false;
      for (std::size_t i = 0; i < docs[d].size(); ++i) {
        const int t = assignments[d][i];
        if (t < 0 || t >= k) return false;
        ++w[static_cast<std::size_t>(t) * vocab_size + static_cast<std::size_t>(docs[d][i])];
        ++dtc[d * static_cast<std::size_t>(k) + static_cast<std::size_t>(t)];
        ++tot[static_cast<std::size_t>(t)];
      }
    }
    return w == word_topic && dtc == doc_topic && tot == topic_totals;
  }
};

namespace detail {

/// Draws from unnormalised weights by inverse CDF.
inline int draw(std::vector<double>& cumulative, Rng& rng) {
  const double u = uniform01(rng) * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  return static_cast<int>(it - cumulative.begin());
}

}  // namespace detail

/// One full sweep over every token of the training corpus.
inline void gibbs_sweep(TopicModel& m, Rng& rng) {
  std::vector<double> cum(static_cast<std::size_t>(m.k));
  const double beta_v = m.beta * static_cast<double>(m.vocab_size);
  for (std::size_t d = 0; d < m.docs.size(); ++d) {
    for (std::size_t i = 0; i < m.docs[d].size(); ++i) {
      const int w = m.docs[d][i];
      int t = m.assignments[d][i];
      --m.wt(t, w);
      --m.dt(d, t);
      --m.topic_totals[static_cast<std::size_t>(t)];
      double acc = 0.0;
      for (int c = 0; c < m.k; ++c) {
        acc += (static_cast<double>(m.dt(d, c)) + m.alpha) * (static_cast<double>(m.wt(c, w)) + m.beta) /
               (static_cast<double>(m.topic_totals[static_cast<std::size_t>(c)]) + beta_v);
        cum[static_cast<std::size_t>(c)] = acc;
      }
      t = detail::draw(cum, rng);
      m.assignments[d][i] = t;
      ++m.wt(t, w);
      ++m.dt(d, t);
      ++m.topic_totals[static_cast<std::size_t>(t)];
    }
  }
}

/// `on_sweep` (optional) is called after each sweep with the sweep index.
inline TopicModel fit_lda(std::vector<TokenDoc> docs, std::size_t vocab_size, int k, double alpha, double beta,
                          int iterations, std::uint64_t seed,
                          const std::function<void(const TopicModel&, int)>& on_sweep = {}) {
  if (k < 1) throw TopicError("fit_lda: k must be at least 1");
  if (iterations < 1) throw TopicError("fit_lda: iterations must be at least 1");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw TopicError("fit_lda: alpha and beta must be positive");
  std::size_t total = 0;
  for (const auto& d : docs) {
    for (int w : d)
      if (w < 0 || static_cast<std::size_t>(w) >= vocab_size) throw TopicError("fit_lda: token id outside vocabulary");
    total += d.size();
  }
  if (total == 0) throw TopicError("fit_lda: corpus has no tokens");
  if (static_cast<std::size_t>(k) > total) throw TopicError("fit_lda: more topics than tokens");

  TopicModel m;
  m.k = k;
  m.alpha = alpha;
  m.beta = beta;
  m.vocab_size = vocab_size;
  m.seed = seed;
  m.word_topic.assign(static_cast<std::size_t>(k) * vocab_size, 0);
  m.doc_topic.assign(docs.size() * static_cast<std::size_t>(k), 0);
  m.topic_totals.assign(static_cast<std::size_t>(k), 0);
  m.docs = std::move(docs);

  Rng rng(derive_seed(seed, "lda"));
  for (std::size_t d = 0; d < m.docs.size(); ++d) {
    std::vector<int> z;
    z.reserve(m.docs[d].size());
    for (int w : m.docs[d]) {
      const int t = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(k)));
      z.push_back(t);
      ++m.wt(t, w);
      ++m.dt(d, t);
      ++m.topic_totals[static_cast<std::size_t>(t)];
    }
    m.assignments.push_back(std::move(z));
  }
  for (int it = 0; it < iterations; ++it) {
    gibbs_sweep(m, rng);
    if (on_sweep) on_sweep(m, it);
  }
  return m;
}

inline TopicModel fit_lda(const std::vector<corpus::Document>& docs, std::size_t vocab_size, int k, double alpha,
                          double beta, int iterations, std::uint64_t seed) {
  return fit_lda(token_docs(docs), vocab_size, k, alpha, beta, iterations, seed);
}

/// Topic mixture of an unseen document: Gibbs sweeps over its tokens with the
/// model's word-topic counts frozen.
inline TopicDistribution infer(const TopicModel& m, const TokenDoc& doc, std::uint64_t seed, int sweeps = 20) {
  const auto k = static_cast<std::size_t>(m.k);
  TopicDistribution out(k, 1.0 / static_cast<double>(k));
  if (doc.empty()) return out;
  Rng rng(seed);
  std::vector<long> local(k, 0);
  std::vector<int> z(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    z[i] = static_cast<int>(uniform_index(rng, k));
    ++local[static_cast<std::size_t>(z[i])];
  }
  std::vector<double> cum(k);
  for (int s = 0; s < sweeps; ++s) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      --local[static_cast<std::size_t>(z[i])];
      double acc = 0.0;
      for (int c = 0; c < m.k; ++c) {
        acc += (static_cast<double>(local[static_cast<std::size_t>(c)]) + m.alpha) * m.phi(c, doc[i]);
        cum[static_cast<std::size_t>(c)] = acc;
      }
      z[i] = detail::draw(cum, rng);
      ++local[static_cast<std::size_t>(z[i])];
    }
  }
  const double n = static_cast<double>(doc.size());
  for (std::size_t t = 0; t < k; ++t)
    out[t] = (static_cast<double>(local[t]) + m.alpha) / (n + static_cast<double>(k) * m.alpha);
  return out;
}

/// exp(-sum log p(w|d) / N) with p(w|d) = sum_t theta_dt phi_tw for the given
/// per-document mixtures.
inline double perplexity_with(const TopicModel& m, const std::vector<TokenDoc>& docs,
                              const std::vector<TopicDistribution>& thetas) {
  if (docs.size() != thetas.size()) throw TopicError("perplexity: docs and mixtures differ in length");
  double log_lik = 0.0;
  std::size_t n = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (int w : docs[d]) {
      double p = 0.0;
      for (int t = 0; t < m.k; ++t) p += thetas[d][static_cast<std::size_t>(t)] * m.phi(t, w);
      log_lik += std::log(p);
      ++n;
    }
  }
  if (n == 0) throw TopicError("perplexity: held-out set has no tokens");
  return std::exp(-log_lik / static_cast<double>(n));
}

inline double perplexity(const TopicModel& m, const std::vector<TokenDoc>& heldout, int fold_in_sweeps = 20) {
  if (heldout.empty()) throw TopicError("perplexity: held-out set is empty");
  std::vector<TopicDistribution> thetas;
  for (std::size_t d = 0; d < heldout.size(); ++d)
    thetas.push_back(infer(m, heldout[d], derive_seed(m.seed, {hash_tag("fold-in"), d}), fold_in_sweeps));
  return perplexity_with(m, heldout, thetas);
}

inline double perplexity(const TopicModel& m, const std::vector<corpus::Document>& heldout) {
  return perplexity(m, token_docs(heldout));
}

inline double training_perplexity(const TopicModel& m) { return perplexity_with(m, m.docs, m.thetas()); }

/// The n highest-count words of topic t; ties go to the lower id.
inline std::vector<int> top_words(const TopicModel& m, int t, std::size_t n) {
  std::vector<int> ids(m.vocab_size);
  std::iota(ids.begin(), ids.end(), 0);
  n = std::min(n, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n), ids.end(), [&](int a, int b) {
    const long ca = m.wt(t, a), cb = m.wt(t, b);
    return ca != cb ? ca > cb : a < b;
  });
  ids.resize(n);
  return ids;
}

/// UMass score of one ranked word list:
///   sum_{i<j} log((D(w_i, w_j) + 1) / D(w_i))
/// where D counts documents containing the word(s). Words with D = 0 are
/// skipped.
inline double umass_score(const std::vector<int>& ranked, const std::vector<std::set<int>>& doc_sets) {
  auto df = [&](int w) {
    std::size_t c = 0;
    for (const auto& s : doc_sets) c += s.count(w);
    return c;
  };
  auto co = [&](int a, int b) {
    std::size_t c = 0;
    for (const auto& s : doc_sets) c += (s.count(a) && s.count(b)) ? 1 : 0;
    return c;
  };
  double score = 0.0;
  for (std::size_t j = 1; j < ranked.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const std::size_t d = df(ranked[i]);
      if (d == 0 || df(ranked[j]) == 0) continue;
      score += std::log((static_cast<double>(co(ranked[i], ranked[j])) + 1.0) / static_cast<double>(d));
    }
  }
  return score;
}

/// Mean UMass coherence over all topics, each using its top_n words.
inline double coherence(const TopicModel& m, const std::vector<TokenDoc>& docs, std::size_t top_n = 10) {
  if (top_n < 2) throw TopicError("coherence: top_n must be at least 2");
  std::vector<std::set<int>> sets;
  for (const auto& d : docs) sets.emplace_back(d.begin(), d.end());
  double total = 0.0;
  for (int t = 0; t < m.k; ++t) total += umass_score(top_words(m, t, top_n), sets);
  return total / static_cast<double>(m.k);
}

inline double coherence(const TopicModel& m, const std::vector<corpus::Document>& docs, std::size_t top_n = 10) {
  return coherence(m, token_docs(docs), top_n);
}

/// Ids of the lambda_t most probable topics, ties to the lower id.
inline std::vector<int> top_topics(const TopicDistribution& dist, std::size_t lambda_t) {
  if (lambda_t < 1 || lambda_t > dist.size()) throw TopicError("top_topics: lambda_t must be in [1, k]");
  std::vector<int> ids(dist.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
    return dist[static_cast<std::size_t>(a)] > dist[static_cast<std::size_t>(b)];
  });
  ids.resize(lambda_t);
  return ids;
}

struct SweepPoint {
  int k = 0;
  double perplexity = 0.0;
  double coherence = 0.0;
};

/// Fits one model per k on `train`; perplexity on `heldout`, coherence on
/// `train`. alpha <= 0 selects 50/k.
inline std::vector<SweepPoint> sweep_k(const std::vector<TokenDoc>& train, const std::vector<TokenDoc>& heldout,
                                       std::size_t vocab_size, const std::vector<int>& ks, double alpha, double beta,
                                       int iterations, std::uint64_t seed) {
  std::vector<SweepPoint> out;
  for (int k : ks) {
    const double a = alpha > 0.0 ? alpha : 50.0 / static_cast<double>(k);
    const TopicModel m = fit_lda(train, vocab_size, k, a, beta, iterations, seed);
    out.push_back({k, perplexity(m, heldout), coherence(m, train)});
  }
  return out;
}

/// Smallest k attaining the maximum coherence.
inline int best_k_by_coherence(const std::vector<SweepPoint>& points) {
  if (points.empty()) throw TopicError("best_k_by_coherence: empty sweep");
  const SweepPoint* best = &points.front();
  for (const auto& p : points)
    if (p.coherence > best->coherence || (p.coherence == best->coherence && p.k < best->k)) best = &p;
  return best->k;
}

}  // namespace heterosgt::topics
