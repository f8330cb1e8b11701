#pragma once

// Synthetic corpora: planted-anomaly news (fakes pair one cluster's body text
// with another cluster's entities) and a planted topic corpus for LDA checks.

#include "corpus.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace heterosgt::synth {

class SynthError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SynthSpec {
  std::size_t clusters = 4;
  std::size_t entities_per_cluster = 8;
  std::size_t words_per_cluster = 40;
  std::size_t articles_per_cluster = 50;
  double fake_fraction = 0.2;
  std::size_t min_sentences = 3, max_sentences = 6;
  std::size_t min_sentence_len = 6, max_sentence_len = 12;
  std::size_t min_entities = 2, max_entities = 4;
  double common_word_rate = 0.2;
  std::uint64_t seed = 1;

  std::size_t articles() const { return clusters * articles_per_cluster; }
  void validate() const;
};

/// Cluster-clean text with small vocabularies: the desk benchmark used by the
/// end-to-end checks.
inline SynthSpec benchmark_spec(std::uint64_t seed, std::size_t articles_per_cluster = 50) {
  SynthSpec s;
  s.entities_per_cluster = 6;
  s.words_per_cluster = 5;
  s.articles_per_cluster = articles_per_cluster;
  s.min_sentences = 6;
  s.max_sentences = 10;
  s.common_word_rate = 0.0;
  s.seed = seed;
  return s;
}

inline void SynthSpec::validate() const {
  if (clusters < 2) throw SynthError("synth: at least two clusters are required");
  if (!(fake_fraction >= 0.0 && fake_fraction < 1.0)) throw SynthError("synth: fake fraction must be in [0, 1)");
  if (articles_per_cluster < 1) throw SynthError("synth: articles per cluster must be positive");
  if (words_per_cluster < 1) throw SynthError("synth: words per cluster must be positive");
  if (min_entities < 1 || min_entities > max_entities) throw SynthError("synth: bad entity count range");
  if (max_entities > entities_per_cluster) throw SynthError("synth: entity pool smaller than the per-article draw");
  if (min_sentences < 1 || min_sentences > max_sentences) throw SynthError("synth: bad sentence count range");
  if (min_sentence_len < 1 || min_sentence_len > max_sentence_len) throw SynthError("synth: bad sentence length range");
  if (!(common_word_rate >= 0.0 && common_word_rate < 1.0)) throw SynthError("synth: common word rate must be in [0, 1)");
}

/// Ground truth kept alongside each generated article.
struct SynthInfo {
  std::size_t body_cluster = 0;
  std::size_t entity_cluster = 0;
  bool fake = false;
};

struct SynthCorpus {
  std::vector<corpus::RawArticle> articles;
  std::vector<SynthInfo> info;
  std::vector<std::vector<std::string>> entity_pools;  // per cluster
  std::vector<std::vector<std::string>> word_pools;    // per cluster
};

/// Pronounceable lowercase pseudo-word for an integer code.
inline std::string pseudo_word(std::uint64_t code, std::size_t syllables) {
  static constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
                                            "br", "dr", "kl", "st", "tr", "sh"};
  static constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  std::string w;
  for (std::size_t s = 0; s < syllables; ++s) {
    w += kOnsets[code % 20];
    code /= 20;
    w += kVowels[code % 7];
    code /= 7;
  }
  return w;
}

inline std::string capitalize(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

namespace detail {
inline std::size_t in_range(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(uniform_index(rng, hi - lo + 1));
}

inline std::vector<std::size_t> distinct(Rng& rng, std::size_t pool, std::size_t n) {
  std::vector<std::size_t> ids(pool);
  std::iota(ids.begin(), ids.end(), 0);
  shuffle_in_place(ids, rng);
  ids.resize(n);
  std::sort(ids.begin(), ids.end());
  return ids;
}
}  // namespace detail

inline const std::vector<std::string>& common_words() {
  static const std::vector<std::string> words{"the", "a", "of", "and", "in", "to", "on", "with", "for", "by"};
  return words;
}

/// Exactly round(fake_fraction * n) articles are fake. Entities are supplied
/// through the pre-annotated field only, so body text carries no entity names.
inline SynthCorpus generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  SynthCorpus out;
  // Distinct codes for every word and entity token across all clusters.
  std::set<std::string> used(common_words().begin(), common_words().end());
  Rng names(derive_seed(spec.seed, "synth.names"));
  auto fresh = [&](std::size_t syllables) {
    for (;;) {
      std::string w = pseudo_word(names(), syllables);
      if (used.insert(w).second) return w;
    }
  };
  for (std::size_t c = 0; c < spec.clusters; ++c) {
    std::vector<std::string> words, ents;
    for (std::size_t i = 0; i < spec.words_per_cluster; ++i) words.push_back(fresh(2));
    for (std::size_t i = 0; i < spec.entities_per_cluster; ++i)
      ents.push_back(capitalize(fresh(2)) + " " + capitalize(fresh(3)));
    out.word_pools.push_back(std::move(words));
    out.entity_pools.push_back(std::move(ents));
  }

  const std::size_t n = spec.articles();
  const auto n_fake = static_cast<std::size_t>(std::llround(spec.fake_fraction * static_cast<double>(n)));
  Rng rng(derive_seed(spec.seed, "synth.articles"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  shuffle_in_place(order, rng);
  std::vector<bool> fake(n, false);
  for (std::size_t i = 0; i < n_fake; ++i) fake[order[i]] = true;

  for (std::size_t i = 0; i < n; ++i) {
    SynthInfo info;
    info.body_cluster = i % spec.clusters;
    info.fake = fake[i];
    info.entity_cluster = info.body_cluster;
    if (info.fake) {
      const std::size_t shift = 1 + static_cast<std::size_t>(uniform_index(rng, spec.clusters - 1));
      info.entity_cluster = (info.body_cluster + shift) % spec.clusters;
    }
    const auto& pool = out.word_pools[info.body_cluster];
    std::string text;
    const std::size_t n_sent = detail::in_range(rng, spec.min_sentences, spec.max_sentences);
    for (std::size_t s = 0; s < n_sent; ++s) {
      const std::size_t len = detail::in_range(rng, spec.min_sentence_len, spec.max_sentence_len);
      for (std::size_t t = 0; t < len; ++t) {
        std::string w = uniform01(rng) < spec.common_word_rate
                            ? common_words()[uniform_index(rng, common_words().size())]
                            : pool[uniform_index(rng, pool.size())];
        if (t == 0) w = capitalize(w);
        if (!text.empty()) text += ' ';
        text += w;
      }
      text += '.';
    }
    const std::size_t n_ent = detail::in_range(rng, spec.min_entities, spec.max_entities);
    std::vector<std::string> ents;
    for (std::size_t e : detail::distinct(rng, spec.entities_per_cluster, n_ent))
      ents.push_back(out.entity_pools[info.entity_cluster][e]);
    out.articles.push_back(corpus::RawArticle{"syn" + std::to_string(i), info.fake ? 1 : 0, std::move(text),
                                              std::move(ents)});
    out.info.push_back(info);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Planted topic corpus

struct PlantedTopicSpec {
  std::size_t clusters = 2;
  std::size_t subtopics_per_cluster = 8;
  std::size_t words_per_subtopic = 25;
  std::size_t docs = 200;
  std::size_t doc_length = 60;
  std::size_t subtopics_per_doc = 2;
  std::uint64_t seed = 1;
};

/// Token-id documents (ids start at 1, id 0 unused) plus the generating cluster
/// of every document. Clusters own disjoint word pools; each cluster is split
/// into sub-topics and a document mixes a few sub-topics of its cluster.
struct PlantedTopicCorpus {
  std::vector<std::vector<int>> docs;
  std::vector<std::size_t> cluster;
  std::size_t vocab_size = 0;  // including id 0
};

inline PlantedTopicCorpus planted_topic_corpus(const PlantedTopicSpec& spec) {
  if (spec.clusters < 1 || spec.subtopics_per_cluster < 1 || spec.words_per_subtopic < 1)
    throw SynthError("planted corpus: empty pools");
  if (spec.subtopics_per_doc < 1 || spec.subtopics_per_doc > spec.subtopics_per_cluster)
    throw SynthError("planted corpus: bad sub-topics per document");
  PlantedTopicCorpus out;
  const std::size_t per_cluster = spec.subtopics_per_cluster * spec.words_per_subtopic;
  out.vocab_size = 1 + spec.clusters * per_cluster;
  Rng rng(derive_seed(spec.seed, "planted-topics"));
  for (std::size_t d = 0; d < spec.docs; ++d) {
    const std::size_t c = d % spec.clusters;
    auto subs = detail::distinct(rng, spec.subtopics_per_cluster, spec.subtopics_per_doc);
    std::vector<int> doc;
    for (std::size_t t = 0; t < spec.doc_length; ++t) {
      const std::size_t s = subs[uniform_index(rng, subs.size())];
      const std::size_t w = uniform_index(rng, spec.words_per_subtopic);
      doc.push_back(static_cast<int>(1 + c * per_cluster + s * spec.words_per_subtopic + w));
    }
    out.docs.push_back(std::move(doc));
    out.cluster.push_back(c);
  }
  return out;
}

}  // namespace heterosgt::synth
