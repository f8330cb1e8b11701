#pragma once

// Random walk with restart rooted at a news node. Nodes are collected in
// first-visit order until `wl` distinct nodes are found or 100 * wl steps have
// been taken; the sequence is then turned into a padded wl x d feature matrix.

#include "autodiff.hpp"
#include "hgraph.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace heterosgt::sampler {

using ad::Matrix;
using hgraph::HeteroGraph;
using hgraph::NodeId;
using hgraph::NodeKind;

/// With probability r jump back to the root; otherwise move to a uniformly
/// chosen neighbour of `current`. A node without neighbours restarts.
inline NodeId rwr_step(const HeteroGraph& g, NodeId current, NodeId root, double r, Rng& rng) {
  if (r < 0.0 || r > 1.0) throw std::invalid_argument("rwr_step: restart probability outside [0, 1]");
  auto nbrs = g.neighbors(current);
  if (uniform01(rng) < r) return root;
  if (nbrs.empty()) return root;
  return nbrs[uniform_index(rng, nbrs.size())];
}

struct RwrSequence {
  NodeId root;
  std::vector<NodeId> nodes;  // distinct, nodes[0] == root
  std::size_t wl = 0;

  friend bool operator==(const RwrSequence&, const RwrSequence&) = default;
};

inline constexpr std::size_t kStepCapFactor = 100;

inline RwrSequence sample_subgraph(const HeteroGraph& g, NodeId root, std::size_t wl, double r, std::uint64_t seed) {
  if (root.kind != NodeKind::News) throw std::invalid_argument("sample_subgraph: root must be a news node");
  if (wl < 1) throw std::invalid_argument("sample_subgraph: wl must be at least 1");
  g.flat(root);
  RwrSequence seq{root, {root}, wl};
  std::set<NodeId> seen{root};
  Rng rng(seed);
  NodeId current = root;
  for (std::size_t step = 0; seq.nodes.size() < wl && step < kStepCapFactor * wl; ++step) {
    current = rwr_step(g, current, root, r, rng);
    if (seen.insert(current).second) seq.nodes.push_back(current);
  }
  return seq;
}

/// Seed of the walk for one root in one epoch. Fixed-walk mode passes epoch 0.
inline std::uint64_t walk_seed(std::uint64_t global_seed, std::size_t root_index, std::size_t epoch) {
  return derive_seed(global_seed, {hash_tag("walk"), root_index, epoch});
}

struct SequenceMatrix {
  Matrix values;                     // wl x d
  std::vector<unsigned char> mask;   // 1 = real node, 0 = padding

  std::size_t valid_count() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1)); }
};

inline SequenceMatrix sequence_matrix(const HeteroGraph& g, const RwrSequence& seq) {
  if (!g.has_features()) throw std::invalid_argument("sequence_matrix: graph has no feature table");
  if (seq.nodes.size() > seq.wl) throw std::invalid_argument("sequence_matrix: sequence longer than wl");
  SequenceMatrix out{Matrix::Zero(static_cast<ad::Index>(seq.wl), g.feature_dim()),
                     std::vector<unsigned char>(seq.wl, 0)};
  for (std::size_t j = 0; j < seq.nodes.size(); ++j) {
    out.values.row(static_cast<ad::Index>(j)) = g.feature(seq.nodes[j]);
    out.mask[j] = 1;
  }
  return out;
}

/// CSV rows `root_id,position,node_kind,node_index` (no header).
inline void write_sequence_csv(std::ostream& os, const std::string& root_id, const RwrSequence& seq) {
  for (std::size_t j = 0; j < seq.nodes.size(); ++j)
    os << root_id << ',' << j << ',' << hgraph::kind_name(seq.nodes[j].kind) << ',' << seq.nodes[j].index << '\n';
}

}  // namespace heterosgt::sampler
