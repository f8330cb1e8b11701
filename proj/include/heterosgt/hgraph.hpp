#pragma once

// News / entity / topic graph.
//
// Edges:
//   news-entity  the article mentions the entity
//   news-topic   the topic is among the article's lambda_t most probable
//   news-news    the pair shares more entities than the mean over the
//                baseline pairs, or the two articles have the same dominant
//                topic

#include "autodiff.hpp"
#include "corpus.hpp"
#include "topics.hpp"

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace heterosgt::hgraph {

using ad::Matrix;

enum class NodeKind : std::uint8_t { News = 0, Entity = 1, Topic = 2 };

inline const char* kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::News: return "news";
    case NodeKind::Entity: return "entity";
    case NodeKind::Topic: return "topic";
  }
  return "?";
}

struct NodeId {
  NodeKind kind = NodeKind::News;
  std::uint32_t index = 0;

  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

inline NodeId news(std::size_t i) { return {NodeKind::News, static_cast<std::uint32_t>(i)}; }
inline NodeId entity(std::size_t i) { return {NodeKind::Entity, static_cast<std::uint32_t>(i)}; }
inline NodeId topic(std::size_t i) { return {NodeKind::Topic, static_cast<std::uint32_t>(i)}; }

enum class EdgeKind { NewsNews, NewsEntity, NewsTopic };

/// Which news pairs the shared-entity mean is taken over.
enum class PairBaseline { Sharing, All };
/// When two articles count as focusing on the same topic.
enum class TopicRule { Top1, Overlap };

struct EdgeRules {
  PairBaseline pairs = PairBaseline::Sharing;
  TopicRule topic = TopicRule::Top1;
  bool include_entities = true;
  bool include_topics = true;
};

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class HeteroGraph {
 public:
  HeteroGraph() = default;
  HeteroGraph(std::size_t n_news, std::size_t n_entities, std::size_t n_topics)
      : counts_{n_news, n_entities, n_topics}, adjacency_(n_news + n_entities + n_topics) {}

  std::size_t count(NodeKind k) const { return counts_[static_cast<std::size_t>(k)]; }
  std::size_t node_count() const { return counts_[0] + counts_[1] + counts_[2]; }

  bool valid(NodeId v) const { return v.index < count(v.kind); }

  std::size_t flat(NodeId v) const {
    if (!valid(v)) throw GraphError(std::string("invalid ") + kind_name(v.kind) + " node " + std::to_string(v.index));
    switch (v.kind) {
      case NodeKind::News: return v.index;
      case NodeKind::Entity: return counts_[0] + v.index;
      case NodeKind::Topic: return counts_[0] + counts_[1] + v.index;
    }
    return 0;
  }

  NodeId node(std::size_t flat_index) const {
    if (flat_index < counts_[0]) return news(flat_index);
    flat_index -= counts_[0];
    if (flat_index < counts_[1]) return entity(flat_index);
    flat_index -= counts_[1];
    if (flat_index < counts_[2]) return topic(flat_index);
    throw GraphError("flat node index out of range");
  }

  /// Sorted by (kind, index).
  std::span<const NodeId> neighbors(NodeId v) const { return adjacency_[flat(v)]; }
  std::size_t degree(NodeId v) const { return neighbors(v).size(); }

  std::size_t edge_count(EdgeKind k) const { return edge_counts_[static_cast<std::size_t>(k)]; }
  std::size_t edge_count() const { return edge_counts_[0] + edge_counts_[1] + edge_counts_[2]; }

  /// Mean shared-entity count used as the news-news threshold.
  double entity_threshold() const { return entity_threshold_; }
  std::size_t lambda_t() const { return lambda_t_; }

  /// Undirected edges as (u, v) with u < v.
  std::set<std::pair<NodeId, NodeId>> edge_set() const {
    std::set<std::pair<NodeId, NodeId>> out;
    for (std::size_t i = 0; i < adjacency_.size(); ++i) {
      const NodeId u = node(i);
      for (const NodeId& v : adjacency_[i])
        if (u < v) out.emplace(u, v);
    }
    return out;
  }

  bool has_features() const { return features_.rows() > 0; }
  ad::Index feature_dim() const { return features_.cols(); }
  const Matrix& features() const { return features_; }
  auto feature(NodeId v) const { return features_.row(static_cast<ad::Index>(flat(v))); }
  void set_features(Matrix f) {
    if (static_cast<std::size_t>(f.rows()) != node_count()) throw GraphError("feature table needs one row per node");
    features_ = std::move(f);
  }

  friend bool operator==(const HeteroGraph& a, const HeteroGraph& b) {
    return a.counts_ == b.counts_ && a.adjacency_ == b.adjacency_ && a.edge_counts_ == b.edge_counts_ &&
           a.entity_threshold_ == b.entity_threshold_ && a.lambda_t_ == b.lambda_t_ && a.features_ == b.features_;
  }

 private:
  friend HeteroGraph build_graph(const std::vector<std::vector<int>>&, std::size_t,
                                 const std::vector<topics::TopicDistribution>&, std::size_t, const EdgeRules&);

  void link(NodeId u, NodeId v) {
    adjacency_[flat(u)].push_back(v);
    adjacency_[flat(v)].push_back(u);
  }

  std::array<std::size_t, 3> counts_{0, 0, 0};
  std::vector<std::vector<NodeId>> adjacency_;
  std::array<std::size_t, 3> edge_counts_{0, 0, 0};
  double entity_threshold_ = 0.0;
  std::size_t lambda_t_ = 0;
  Matrix features_;
};

using EntitySets = std::vector<std::vector<int>>;

/// `doc_entities[i]` is the distinct, ascending entity set of article i.
inline HeteroGraph build_graph(const std::vector<std::vector<int>>& doc_entities, std::size_t n_entities,
                               const std::vector<topics::TopicDistribution>& dists, std::size_t lambda_t,
                               const EdgeRules& rules = {}) {
  const std::size_t n = doc_entities.size();
  if (dists.size() != n) throw GraphError("build_graph: topic distributions are not aligned with documents");
  if (lambda_t < 1) throw GraphError("build_graph: lambda_t must be at least 1");
  const std::size_t k = n ? dists[0].size() : 0;
  for (const auto& d : dists)
    if (d.size() != k) throw GraphError("build_graph: topic distributions differ in length");
  if (n && lambda_t > k) throw GraphError("build_graph: lambda_t exceeds topic count");

  HeteroGraph g(n, rules.include_entities ? n_entities : 0, rules.include_topics ? k : 0);
  g.lambda_t_ = lambda_t;

  // Shared-entity counts through an inverted index.
  std::vector<std::vector<std::uint32_t>> postings(n_entities);
  for (std::size_t i = 0; i < n; ++i) {
    for (int e : doc_entities[i]) {
      if (e < 0 || static_cast<std::size_t>(e) >= n_entities) throw GraphError("build_graph: entity id out of range");
      postings[static_cast<std::size_t>(e)].push_back(static_cast<std::uint32_t>(i));
    }
  }
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> shared;
  for (const auto& list : postings)
    for (std::size_t a = 0; a < list.size(); ++a)
      for (std::size_t b = a + 1; b < list.size(); ++b) ++shared[{list[a], list[b]}];

  double total = 0.0;
  for (const auto& [pair, c] : shared) total += static_cast<double>(c);
  double baseline_pairs = 0.0;
  if (rules.pairs == PairBaseline::Sharing) baseline_pairs = static_cast<double>(shared.size());
  else baseline_pairs = static_cast<double>(n) * static_cast<double>(n > 0 ? n - 1 : 0) / 2.0;
  g.entity_threshold_ = baseline_pairs > 0 ? total / baseline_pairs : 0.0;

  std::set<std::pair<std::uint32_t, std::uint32_t>> news_pairs;
  for (const auto& [pair, c] : shared)
    if (static_cast<double>(c) > g.entity_threshold_) news_pairs.insert(pair);

  std::vector<std::vector<int>> tops(n);
  for (std::size_t i = 0; i < n; ++i) tops[i] = topics::top_topics(dists[i], lambda_t);

  std::vector<std::vector<std::uint32_t>> by_topic(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (rules.topic == TopicRule::Top1) {
      by_topic[static_cast<std::size_t>(tops[i][0])].push_back(static_cast<std::uint32_t>(i));
    } else {
      for (int t : tops[i]) by_topic[static_cast<std::size_t>(t)].push_back(static_cast<std::uint32_t>(i));
    }
  }
  for (const auto& group : by_topic)
    for (std::size_t a = 0; a < group.size(); ++a)
      for (std::size_t b = a + 1; b < group.size(); ++b) news_pairs.emplace(group[a], group[b]);

  for (const auto& [a, b] : news_pairs) g.link(news(a), news(b));
  g.edge_counts_[static_cast<std::size_t>(EdgeKind::NewsNews)] = news_pairs.size();

  for (std::size_t i = 0; i < n; ++i) {
    if (rules.include_entities) {
      for (int e : doc_entities[i]) g.link(news(i), entity(static_cast<std::size_t>(e)));
      g.edge_counts_[static_cast<std::size_t>(EdgeKind::NewsEntity)] += doc_entities[i].size();
    }
    if (rules.include_topics) {
      for (int t : tops[i]) g.link(news(i), topic(static_cast<std::size_t>(t)));
      g.edge_counts_[static_cast<std::size_t>(EdgeKind::NewsTopic)] += tops[i].size();
    }
  }
  for (auto& adj : g.adjacency_) std::sort(adj.begin(), adj.end());
  return g;
}

inline std::vector<std::vector<int>> entity_sets(const std::vector<corpus::Document>& docs) {
  std::vector<std::vector<int>> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(d.entity_set());
  return out;
}

inline HeteroGraph build_graph(const std::vector<corpus::Document>& docs, std::size_t n_entities,
                               const std::vector<topics::TopicDistribution>& dists, std::size_t lambda_t,
                               const EdgeRules& rules = {}) {
  return build_graph(entity_sets(docs), n_entities, dists, lambda_t, rules);
}

inline std::span<const NodeId> neighbors(const HeteroGraph& g, NodeId v) { return g.neighbors(v); }

// ---------------------------------------------------------------------------
// Features

struct FeatureTable {
  Matrix features;                   // one row per node, flat order
  std::size_t empty_entities = 0;    // entities with no in-vocabulary token
};

namespace detail {
inline void mean_embedding_into(Eigen::Ref<Matrix> row, const Matrix& embedding, const std::vector<int>& ids,
                                bool& empty) {
  row.setZero();
  std::size_t used = 0;
  Matrix acc = Matrix::Zero(1, embedding.cols());
  for (int id : ids) {
    if (id <= 0 || id >= embedding.rows()) continue;
    acc += embedding.row(id);
    ++used;
  }
  empty = used == 0;
  if (empty) return;
  acc /= static_cast<double>(used);
  const ad::Index w = std::min(acc.cols(), row.cols());
  row.leftCols(w) = acc.leftCols(w);
}
}  // namespace detail

/// News rows are the article vectors; entity and topic rows are the mean
/// embedding of their words, zero-padded or truncated to the article width.
/// Token id 0 (unknown) is ignored.
inline FeatureTable node_features(const HeteroGraph& g, const Matrix& article_vectors, const Matrix& embedding,
                                  const std::vector<std::vector<int>>& entity_tokens,
                                  const std::vector<std::vector<int>>& topic_words) {
  const std::size_t n_news = g.count(NodeKind::News);
  if (static_cast<std::size_t>(article_vectors.rows()) != n_news)
    throw GraphError("node_features: need one article vector per news node");
  if (g.count(NodeKind::Entity) && entity_tokens.size() != g.count(NodeKind::Entity))
    throw GraphError("node_features: entity token lists do not match entity nodes");
  if (g.count(NodeKind::Topic) && topic_words.size() != g.count(NodeKind::Topic))
    throw GraphError("node_features: topic word lists do not match topic nodes");
  const ad::Index d = article_vectors.cols();
  FeatureTable out;
  out.features = Matrix::Zero(static_cast<ad::Index>(g.node_count()), d);
  out.features.topRows(static_cast<ad::Index>(n_news)) = article_vectors;
  for (std::size_t e = 0; e < g.count(NodeKind::Entity); ++e) {
    bool empty = false;
    detail::mean_embedding_into(out.features.row(static_cast<ad::Index>(g.flat(entity(e)))), embedding,
                                entity_tokens[e], empty);
    out.empty_entities += empty ? 1 : 0;
  }
  for (std::size_t t = 0; t < g.count(NodeKind::Topic); ++t) {
    bool empty = false;
    detail::mean_embedding_into(out.features.row(static_cast<ad::Index>(g.flat(topic(t)))), embedding,
                                topic_words[t], empty);
  }
  return out;
}

/// Vocabulary ids of each entity's surface tokens.
inline std::vector<std::vector<int>> entity_token_ids(const corpus::EntityTable& entities,
                                                      const corpus::Vocabulary& vocab) {
  std::vector<std::vector<int>> out;
  for (std::size_t e = 0; e < entities.size(); ++e) {
    std::vector<int> ids;
    for (const auto& s : corpus::split_sentences(entities.surface(static_cast<int>(e))))
      for (const auto& t : s) ids.push_back(vocab.id(t.text));
    out.push_back(std::move(ids));
  }
  return out;
}

/// Up to n highest-count words of every topic (words never assigned are skipped).
inline std::vector<std::vector<int>> topic_word_ids(const topics::TopicModel& m, std::size_t n = 10) {
  std::vector<std::vector<int>> out;
  for (int t = 0; t < m.k; ++t) {
    std::vector<int> ids;
    for (int w : topics::top_words(m, t, n))
      if (m.wt(t, w) > 0) ids.push_back(w);
    out.push_back(std::move(ids));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stats

inline std::map<std::size_t, std::size_t> degree_histogram(const HeteroGraph& g) {
  std::map<std::size_t, std::size_t> h;
  for (std::size_t i = 0; i < g.node_count(); ++i) ++h[g.degree(g.node(i))];
  return h;
}

/// Plain-text `key: value` report.
inline void write_stats(std::ostream& os, const HeteroGraph& g) {
  os << "news_nodes: " << g.count(NodeKind::News) << '\n';
  os << "entity_nodes: " << g.count(NodeKind::Entity) << '\n';
  os << "topic_nodes: " << g.count(NodeKind::Topic) << '\n';
  os << "news_news_edges: " << g.edge_count(EdgeKind::NewsNews) << '\n';
  os << "news_entity_edges: " << g.edge_count(EdgeKind::NewsEntity) << '\n';
  os << "news_topic_edges: " << g.edge_count(EdgeKind::NewsTopic) << '\n';
  os << "mean_shared_entity_threshold: " << g.entity_threshold() << '\n';
  os << "lambda_t: " << g.lambda_t() << '\n';
  for (const auto& [deg, c] : degree_histogram(g)) os << "degree_" << deg << ": " << c << '\n';
}

}  // namespace heterosgt::hgraph
