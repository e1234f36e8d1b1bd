#include "gard/workbench/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <stdexcept>

namespace gard::workbench {

std::vector<std::size_t> Corpus::sizes() const {
  std::vector<std::size_t> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(g.size());
  return out;
}

void Corpus::validate() const {
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (graphs[i].max_node_type() >= node_vocab || graphs[i].max_edge_type() >= edge_vocab) {
      throw GraphError("graph " + std::to_string(i) + " uses a type outside the corpus vocabulary");
    }
  }
}

namespace {

using EdgeSet = std::set<std::pair<NodeId, NodeId>>;

void add_edge(EdgeSet& edges, NodeId a, NodeId b) { edges.emplace(std::min(a, b), std::max(a, b)); }

// Builds an untyped graph and relabels it with a random permutation.
LabeledGraph shuffled_simple(std::size_t n, const EdgeSet& edges, Rng& rng) {
  std::vector<std::pair<NodeId, NodeId>> list(edges.begin(), edges.end());
  const auto perm = random_permutation(n, rng);
  return permute(make_simple_graph(n, list), perm);
}

bool connected(std::size_t n, const EdgeSet& edges) {
  if (n == 0) return true;
  std::vector<std::vector<NodeId>> adj(n);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<bool> seen(n, false);
  std::queue<NodeId> q;
  q.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    const NodeId u = q.front();
    q.pop();
    for (NodeId v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        q.push(v);
      }
    }
  }
  return count == n;
}

std::size_t uniform_size(Rng& rng, SizeRange r) { return r.min + uniform_index(rng, r.max - r.min + 1); }

Corpus named(const std::string& name, int node_vocab, int edge_vocab) {
  Corpus c;
  c.name = name;
  c.node_vocab = node_vocab;
  c.edge_vocab = edge_vocab;
  c.meta["generator"] = name;
  return c;
}

}  // namespace

Corpus gen_community_small(Rng& rng, std::size_t count, SizeRange sizes) {
  if (sizes.min < 2 || sizes.max < sizes.min) throw std::invalid_argument("community sizes need 2 <= min <= max");
  Corpus c = named("community-small", 1, 2);
  c.meta["size_min"] = std::to_string(sizes.min);
  c.meta["size_max"] = std::to_string(sizes.max);
  for (std::size_t g = 0; g < count; ++g) {
    const std::size_t n = uniform_size(rng, sizes);
    const std::size_t n1 = n / 2;
    const std::size_t cross = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.05 * static_cast<double>(n))));
    EdgeSet edges;
    do {
      edges.clear();
      for (NodeId i = 0; i < n; ++i) {
        for (NodeId j = i + 1; j < n; ++j) {
          if ((i < n1) == (j < n1) && bernoulli(rng, 0.7)) add_edge(edges, i, j);
        }
      }
      std::set<std::pair<NodeId, NodeId>> inter;
      while (inter.size() < std::min(cross, n1 * (n - n1))) {
        inter.emplace(uniform_index(rng, n1), n1 + uniform_index(rng, n - n1));
      }
      for (auto [a, b] : inter) add_edge(edges, a, b);
    } while (!connected(n, edges));
    c.graphs.push_back(shuffled_simple(n, edges, rng));
  }
  return c;
}

Corpus gen_caveman(Rng& rng, std::size_t count, SizeRange sizes) {
  std::vector<std::pair<std::size_t, std::size_t>> shapes;  // (cliques, clique size)
  for (std::size_t cl = 2; cl <= sizes.max; ++cl) {
    for (std::size_t k = 3; cl * k <= sizes.max; ++k) {
      if (cl * k >= sizes.min) shapes.emplace_back(cl, k);
    }
  }
  if (shapes.empty()) throw std::invalid_argument("no caveman shape fits the size range");
  Corpus c = named("caveman", 1, 2);
  c.meta["size_min"] = std::to_string(sizes.min);
  c.meta["size_max"] = std::to_string(sizes.max);
  for (std::size_t g = 0; g < count; ++g) {
    const auto [cliques, k] = shapes[uniform_index(rng, shapes.size())];
    const std::size_t n = cliques * k;
    EdgeSet edges;
    for (std::size_t b = 0; b < cliques; ++b) {
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) add_edge(edges, b * k + i, b * k + j);
      }
    }
    for (std::size_t start = 0; start < n; start += k) {
      edges.erase({start, start + 1});
      add_edge(edges, start, (start + n - 1) % n);
    }
    c.graphs.push_back(shuffled_simple(n, edges, rng));
  }
  return c;
}

LabeledGraph barabasi_albert(Rng& rng, std::size_t n, std::size_t m) {
  if (m == 0 || n <= m) throw std::invalid_argument("preferential attachment needs n > m >= 1");
  EdgeSet edges;
  std::vector<NodeId> targets;  // one entry per edge endpoint
  for (NodeId i = 0; i < m; ++i) targets.push_back(i);
  for (NodeId v = m; v < n; ++v) {
    std::set<NodeId> chosen;
    while (chosen.size() < m) chosen.insert(targets[uniform_index(rng, targets.size())]);
    for (NodeId u : chosen) {
      add_edge(edges, u, v);
      targets.push_back(u);
      targets.push_back(v);
    }
  }
  std::vector<std::pair<NodeId, NodeId>> list(edges.begin(), edges.end());
  return make_simple_graph(n, list);
}

LabeledGraph ego_graph(const LabeledGraph& g, NodeId center, std::size_t radius) {
  std::vector<std::size_t> dist(g.size(), SIZE_MAX);
  std::queue<NodeId> q;
  dist.at(center) = 0;
  q.push(center);
  while (!q.empty()) {
    const NodeId u = q.front();
    q.pop();
    if (dist[u] == radius) continue;
    for (NodeId v : g.neighbors(u)) {
      if (dist[v] == SIZE_MAX) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
    }
  }
  std::vector<NodeId> keep{center};
  for (NodeId i = 0; i < g.size(); ++i) {
    if (i != center && dist[i] != SIZE_MAX) keep.push_back(i);
  }
  std::vector<int> types;
  for (NodeId v : keep) types.push_back(g.node_type(v));
  std::vector<TypedEdge> edges;
  for (std::size_t a = 0; a < keep.size(); ++a) {
    for (std::size_t b = a + 1; b < keep.size(); ++b) {
      if (g.has_edge(keep[a], keep[b])) edges.push_back({a, b, g.edge_type(keep[a], keep[b])});
    }
  }
  return LabeledGraph::create(std::move(types), edges);
}

Corpus gen_ego(Rng& rng, std::size_t count, const LabeledGraph* base) {
  LabeledGraph synthetic;
  if (!base) {
    synthetic = barabasi_albert(rng, 400, 2);
    base = &synthetic;
  }
  if (base->size() == 0) throw std::invalid_argument("ego extraction needs a non-empty base graph");
  constexpr std::size_t kMin = 4, kMax = 18, kAttempts = 100000;
  Corpus c = named("ego", 1, 2);
  for (std::size_t g = 0; g < count; ++g) {
    bool done = false;
    for (std::size_t attempt = 0; attempt < kAttempts && !done; ++attempt) {
      const NodeId center = uniform_index(rng, base->size());
      LabeledGraph ego = ego_graph(*base, center, 1);
      if (ego.size() > kMax) continue;
      if (ego.size() < kMin || bernoulli(rng, 0.3)) {
        LabeledGraph wider = ego_graph(*base, center, 2);
        if (wider.size() >= kMin && wider.size() <= kMax) ego = std::move(wider);
      }
      if (ego.size() < kMin) continue;
      const auto perm = random_permutation(ego.size(), rng);
      c.graphs.push_back(permute(ego, perm));
      done = true;
    }
    if (!done) throw std::runtime_error("base graph has no ego network with 4..18 nodes");
  }
  return c;
}

Corpus gen_typed_toy(Rng& rng, std::size_t count) {
  Corpus c = named("typed-toy", 4, 4);
  for (std::size_t g = 0; g < count; ++g) {
    const std::size_t n = 3 + uniform_index(rng, 7);
    std::vector<int> types(n);
    for (auto& t : types) t = static_cast<int>(sample_categorical(kTypedToyNodeProbs, rng));
    std::vector<TypedEdge> edges;
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    auto edge_type = [&] { return static_cast<int>(sample_categorical(kTypedToyEdgeProbs, rng)) + 1; };
    for (NodeId i = 1; i < n; ++i) {
      const NodeId j = uniform_index(rng, i);
      edges.push_back({j, i, edge_type()});
      adj[i][j] = adj[j][i] = true;
    }
    if (bernoulli(rng, kTypedToyExtraEdge)) {
      std::vector<std::pair<NodeId, NodeId>> free;
      for (NodeId i = 0; i < n; ++i) {
        for (NodeId j = i + 1; j < n; ++j) {
          if (!adj[i][j]) free.emplace_back(i, j);
        }
      }
      if (!free.empty()) {
        const auto [a, b] = free[uniform_index(rng, free.size())];
        edges.push_back({a, b, edge_type()});
      }
    }
    const auto perm = random_permutation(n, rng);
    c.graphs.push_back(permute(LabeledGraph::create(std::move(types), edges, 4, 4), perm));
  }
  return c;
}

Corpus gen_triangles(Rng& rng, std::size_t count) {
  Corpus c = named("triangle", 1, 2);
  const EdgeSet tri{{0, 1}, {0, 2}, {1, 2}};
  for (std::size_t g = 0; g < count; ++g) c.graphs.push_back(shuffled_simple(3, tri, rng));
  return c;
}

Corpus gen_two_cliques(Rng& rng, std::size_t count) {
  Corpus c = named("two-cliques", 1, 2);
  EdgeSet edges;
  for (NodeId b = 0; b < 2; ++b) {
    for (NodeId i = 0; i < 4; ++i) {
      for (NodeId j = i + 1; j < 4; ++j) add_edge(edges, 4 * b + i, 4 * b + j);
    }
  }
  add_edge(edges, 3, 4);
  for (std::size_t g = 0; g < count; ++g) c.graphs.push_back(shuffled_simple(8, edges, rng));
  return c;
}

Corpus gen_erdos_renyi(Rng& rng, std::span<const std::size_t> sizes, double p) {
  Corpus c = named("erdos-renyi", 1, 2);
  for (std::size_t n : sizes) {
    EdgeSet edges;
    for (NodeId i = 0; i < n; ++i) {
      for (NodeId j = i + 1; j < n; ++j) {
        if (bernoulli(rng, p)) add_edge(edges, i, j);
      }
    }
    std::vector<std::pair<NodeId, NodeId>> list(edges.begin(), edges.end());
    c.graphs.push_back(make_simple_graph(n, list));
  }
  return c;
}

double edge_density(std::span<const LabeledGraph> graphs) {
  double edges = 0.0, pairs = 0.0;
  for (const auto& g : graphs) {
    edges += static_cast<double>(g.edge_count());
    pairs += static_cast<double>(g.size() * (g.size() - (g.size() > 0 ? 1 : 0))) / 2.0;
  }
  return pairs > 0.0 ? edges / pairs : 0.0;
}

Corpus make_dataset(const std::string& kind, std::size_t count, std::uint64_t seed, SizeRange sizes) {
  Rng rng(stream_seed(seed, 0, 0x64617461));
  const bool custom = sizes.max > 0;
  Corpus c;
  if (kind == "community-small") {
    c = gen_community_small(rng, count, custom ? sizes : SizeRange{12, 20});
  } else if (kind == "caveman") {
    c = gen_caveman(rng, count, custom ? sizes : SizeRange{5, 10});
  } else if (kind == "ego") {
    c = gen_ego(rng, count);
  } else if (kind == "typed-toy") {
    c = gen_typed_toy(rng, count);
  } else if (kind == "triangle") {
    c = gen_triangles(rng, count);
  } else if (kind == "two-cliques") {
    c = gen_two_cliques(rng, count);
  } else {
    throw std::invalid_argument("unknown dataset kind '" + kind +
                                "' (community-small, caveman, ego, typed-toy, triangle, two-cliques)");
  }
  c.meta["seed"] = std::to_string(seed);
  return c;
}

Split split(const Corpus& corpus, std::uint64_t seed, double val_fraction) {
  const std::size_t n = corpus.graphs.size();
  if (n < 5) throw std::invalid_argument("split needs at least 5 graphs, corpus has " + std::to_string(n));
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw std::invalid_argument("validation fraction must be in (0, 1)");
  Rng rng(stream_seed(seed, 0, 0x73706c));
  const auto perm = random_permutation(n, rng);
  const auto n_test = static_cast<std::size_t>(std::lround(0.2 * static_cast<double>(n)));
  const std::size_t rest = n - n_test;
  const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(val_fraction * static_cast<double>(rest))));
  Split s;
  for (Corpus* part : {&s.train, &s.val, &s.test}) {
    part->name = corpus.name;
    part->node_vocab = corpus.node_vocab;
    part->edge_vocab = corpus.edge_vocab;
    part->meta = corpus.meta;
  }
  s.train.meta["split"] = "train";
  s.val.meta["split"] = "val";
  s.test.meta["split"] = "test";
  for (std::size_t i = 0; i < n; ++i) {
    const auto& g = corpus.graphs[perm[i]];
    if (i < n_test) {
      s.test.graphs.push_back(g);
    } else if (i < n_test + n_val) {
      s.val.graphs.push_back(g);
    } else {
      s.train.graphs.push_back(g);
    }
  }
  return s;
}

}  // namespace gard::workbench
