#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gard/graph.hpp"
#include "gard/random.hpp"

namespace gard::workbench {

/// A named list of graphs with vocabulary sizes and provenance.
struct Corpus {
  std::string name;
  std::vector<LabeledGraph> graphs;
  int node_vocab = 1;
  int edge_vocab = 2;  // includes ABSENT
  std::map<std::string, std::string> meta;

  std::vector<std::size_t> sizes() const;
  /// Throws GraphError if a graph uses a type outside the vocabularies.
  void validate() const;
};

struct SizeRange {
  std::size_t min = 0;
  std::size_t max = 0;
};

/// Two near-equal halves, each G(n/2, 0.7), joined by max(1, round(0.05 n))
/// random cross edges; resampled until connected. Node ids are shuffled.
Corpus gen_community_small(Rng& rng, std::size_t count, SizeRange sizes = {12, 20});

/// Connected caveman graphs: c cliques of size k (c >= 2, k >= 3, c*k in
/// range), one edge per clique rewired to the previous clique.
Corpus gen_caveman(Rng& rng, std::size_t count, SizeRange sizes = {5, 10});

/// Preferential-attachment base graph (each new node links to `m` targets).
LabeledGraph barabasi_albert(Rng& rng, std::size_t n, std::size_t m);

/// Induced subgraph on the nodes within `radius` hops of `center`; the center
/// becomes node 0 and the rest keep ascending id order.
LabeledGraph ego_graph(const LabeledGraph& g, NodeId center, std::size_t radius);

/// Radius-1 (or radius-2 when the 1-hop ball is too small) ego graphs with
/// 4..18 nodes. Uses a 400-node preferential-attachment base when `base` is null.
Corpus gen_ego(Rng& rng, std::size_t count, const LabeledGraph* base = nullptr);

/// Typed toy grammar, 4 node types and 3 edge types:
///   n ~ U{3..9}; node types ~ [0.5, 0.2, 0.2, 0.1];
///   a uniform random recursive tree (node i attaches to U{0..i-1});
///   with probability 0.3 one extra edge between a random non-adjacent pair;
///   every edge type ~ [0.7, 0.2, 0.1] over types 1..3; ids shuffled.
Corpus gen_typed_toy(Rng& rng, std::size_t count);

inline constexpr double kTypedToyNodeProbs[] = {0.5, 0.2, 0.2, 0.1};
inline constexpr double kTypedToyEdgeProbs[] = {0.7, 0.2, 0.1};
inline constexpr double kTypedToyExtraEdge = 0.3;

/// Copies of K3 with shuffled ids.
Corpus gen_triangles(Rng& rng, std::size_t count);

/// Two K4 blocks joined by one bridge edge, ids shuffled.
Corpus gen_two_cliques(Rng& rng, std::size_t count);

/// G(n, p) graphs with the given sizes.
Corpus gen_erdos_renyi(Rng& rng, std::span<const std::size_t> sizes, double p);

/// Edge density over a set: total edges / total node pairs.
double edge_density(std::span<const LabeledGraph> graphs);

/// Dispatch by kind name: community-small, caveman, ego, typed-toy, triangle, two-cliques.
Corpus make_dataset(const std::string& kind, std::size_t count, std::uint64_t seed, SizeRange sizes = {0, 0});

struct Split {
  Corpus train, val, test;
};

/// test = round(0.2 N); val = max(1, round(val_fraction * rest)); the rest trains.
Split split(const Corpus& corpus, std::uint64_t seed, double val_fraction = 0.2);

}  // namespace gard::workbench
