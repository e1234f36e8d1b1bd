#include "gard/graph.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace gard {

namespace {

std::string pair_str(NodeId u, NodeId v) {
  return "(" + std::to_string(u) + "," + std::to_string(v) + ")";
}

}  // namespace

LabeledGraph LabeledGraph::create(std::vector<int> node_types, std::span<const TypedEdge> edges,
                                  int node_vocab, int edge_vocab) {
  const std::size_t n = node_types.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (node_types[i] < 0 || (node_vocab > 0 && node_types[i] >= node_vocab)) {
      throw GraphError("node " + std::to_string(i) + " has out-of-range type " +
                       std::to_string(node_types[i]));
    }
  }
  LabeledGraph g;
  g.node_types_ = std::move(node_types);
  g.adj_.assign(n * n, 0);
  for (const auto& e : edges) {
    if (e.u >= n || e.v >= n) throw GraphError("edge " + pair_str(e.u, e.v) + " out of range");
    if (e.u == e.v) throw GraphError("self-loop at node " + std::to_string(e.u));
    if (e.type <= 0 || e.type > 255 || (edge_vocab > 0 && e.type >= edge_vocab)) {
      throw GraphError("edge " + pair_str(e.u, e.v) + " has out-of-range type " +
                       std::to_string(e.type));
    }
    auto& slot = g.adj_[e.u * n + e.v];
    if (slot != 0) {
      if (slot != e.type) {
        throw GraphError("edge " + pair_str(e.u, e.v) + " given with conflicting types");
      }
      throw GraphError("duplicate edge " + pair_str(e.u, e.v));
    }
    slot = static_cast<std::uint8_t>(e.type);
    g.adj_[e.v * n + e.u] = static_cast<std::uint8_t>(e.type);
    ++g.edge_count_;
  }
  return g;
}

std::size_t LabeledGraph::degree(NodeId i) const {
  const std::size_t n = size();
  std::size_t d = 0;
  for (std::size_t j = 0; j < n; ++j) d += adj_[i * n + j] != 0;
  return d;
}

std::vector<NodeId> LabeledGraph::neighbors(NodeId i) const {
  const std::size_t n = size();
  std::vector<NodeId> out;
  for (std::size_t j = 0; j < n; ++j) {
    if (adj_[i * n + j] != 0) out.push_back(j);
  }
  return out;
}

std::vector<TypedEdge> LabeledGraph::edges() const {
  const std::size_t n = size();
  std::vector<TypedEdge> out;
  out.reserve(edge_count_);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (adj_[i * n + j] != 0) out.push_back({i, j, adj_[i * n + j]});
    }
  }
  return out;
}

int LabeledGraph::max_node_type() const {
  return node_types_.empty() ? -1 : *std::max_element(node_types_.begin(), node_types_.end());
}

int LabeledGraph::max_edge_type() const {
  return adj_.empty() ? 0 : *std::max_element(adj_.begin(), adj_.end());
}

LabeledGraph make_simple_graph(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges) {
  std::vector<TypedEdge> typed;
  typed.reserve(edges.size());
  for (auto [u, v] : edges) typed.push_back({u, v, 1});
  return LabeledGraph::create(std::vector<int>(n, 0), typed);
}

bool is_permutation_of_range(std::span<const NodeId> perm, std::size_t n) {
  if (perm.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (NodeId p : perm) {
    if (p >= n || seen[p]) return false;
    seen[p] = true;
  }
  return true;
}

std::vector<NodeId> inverse_permutation(std::span<const NodeId> perm) {
  if (!is_permutation_of_range(perm, perm.size())) throw GraphError("not a permutation");
  std::vector<NodeId> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  return inv;
}

LabeledGraph permute(const LabeledGraph& g, std::span<const NodeId> perm) {
  const std::size_t n = g.size();
  if (!is_permutation_of_range(perm, n)) throw GraphError("permutation is not a bijection on the nodes");
  std::vector<int> types(n);
  for (std::size_t i = 0; i < n; ++i) types[perm[i]] = g.node_type(i);
  auto edges = g.edges();
  for (auto& e : edges) {
    e.u = perm[e.u];
    e.v = perm[e.v];
  }
  return LabeledGraph::create(std::move(types), edges);
}

MaskedGraph::MaskedGraph(LabeledGraph base)
    : MaskedGraph(std::make_shared<const LabeledGraph>(std::move(base))) {}

MaskedGraph::MaskedGraph(std::shared_ptr<const LabeledGraph> base)
    : base_(std::move(base)), position_(base_->size(), 0), t_(0) {}

MaskedGraph MaskedGraph::fully_masked(std::size_t n, int placeholder_type) {
  MaskedGraph s(LabeledGraph::create(std::vector<int>(n, placeholder_type), {}));
  for (std::size_t i = 0; i < n; ++i) s.position_[i] = n - i;
  s.t_ = n;
  return s;
}

NodeId MaskedGraph::node_at_position(std::size_t pos) const {
  for (std::size_t i = 0; i < position_.size(); ++i) {
    if (position_[i] == pos) return i;
  }
  throw GraphError("no node absorbed at position " + std::to_string(pos));
}

std::vector<NodeId> MaskedGraph::unmasked_nodes() const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < position_.size(); ++i) {
    if (position_[i] == 0) out.push_back(i);
  }
  return out;
}

std::vector<NodeId> MaskedGraph::masked_nodes() const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < position_.size(); ++i) {
    if (position_[i] != 0) out.push_back(i);
  }
  return out;
}

MaskedGraph absorb_node(const MaskedGraph& state, NodeId node) {
  if (node >= state.size()) throw GraphError("node " + std::to_string(node) + " out of range");
  if (state.is_masked(node)) throw GraphError("node " + std::to_string(node) + " is already absorbed");
  MaskedGraph next = state;
  next.position_[node] = ++next.t_;
  return next;
}

EdgeState edge_state(const MaskedGraph& state, NodeId i, NodeId j) {
  if (i == j) throw GraphError("edge_state requires distinct endpoints");
  if (i >= state.size() || j >= state.size()) throw GraphError("edge_state endpoint out of range");
  if (state.is_masked(i) || state.is_masked(j)) return kMaskState;
  return state.base().edge_type(i, j);
}

MaskedGraph apply_prediction(const MaskedGraph& state, NodeId target, int node_type,
                             std::span<const EdgeState> edges) {
  if (target >= state.size()) throw GraphError("target out of range");
  if (!state.is_masked(target)) throw GraphError("target is not masked");
  if (state.absorb_position(target) != state.masked_count()) {
    throw GraphError("target is not the most recently absorbed node");
  }
  const auto unmasked = state.unmasked_nodes();
  if (edges.size() != unmasked.size()) {
    throw GraphError("edge assignment has " + std::to_string(edges.size()) + " entries, expected " +
                     std::to_string(unmasked.size()));
  }
  if (node_type < 0) throw GraphError("negative node type");

  const LabeledGraph& base = state.base();
  std::vector<int> types = base.node_types();
  types[target] = node_type;
  std::vector<TypedEdge> new_edges;
  // Pairs between the target and still-masked nodes are unobservable; keep them.
  for (const auto& e : base.edges()) {
    const bool touches_context = (e.u == target && !state.is_masked(e.v)) ||
                                 (e.v == target && !state.is_masked(e.u));
    if (!touches_context) new_edges.push_back(e);
  }
  for (std::size_t k = 0; k < unmasked.size(); ++k) {
    if (edges[k] == kMaskState) throw GraphError("MASK is not a valid predicted edge state");
    if (edges[k] < 0) throw GraphError("negative edge state");
    if (edges[k] != kAbsent) {
      new_edges.push_back({std::min(target, unmasked[k]), std::max(target, unmasked[k]), edges[k]});
    }
  }
  MaskedGraph next(std::make_shared<const LabeledGraph>(LabeledGraph::create(std::move(types), new_edges)));
  next.position_ = state.position_;
  next.position_[target] = 0;
  next.t_ = state.t_ - 1;
  return next;
}

DenoisingView make_view(const LabeledGraph& g, std::span<const NodeId> unmasked, NodeId target,
                        int mask_token) {
  DenoisingView view;
  view.mask_token = mask_token;
  view.kept_nodes.assign(unmasked.begin(), unmasked.end());
  view.kept_nodes.push_back(target);
  const std::size_t m = view.kept_nodes.size();
  view.tokens.resize(m);
  for (std::size_t a = 0; a + 1 < m; ++a) view.tokens[a] = g.node_type(view.kept_nodes[a]);
  view.tokens[m - 1] = mask_token;
  view.states.assign(m * m, kAbsent);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      if (a == m - 1 || b == m - 1) {
        view.states[a * m + b] = kMaskState;
      } else {
        view.states[a * m + b] = g.edge_type(view.kept_nodes[a], view.kept_nodes[b]);
      }
    }
  }
  return view;
}

DenoisingView denoising_view(const MaskedGraph& state, NodeId target, int mask_token) {
  if (target >= state.size()) throw GraphError("target out of range");
  if (!state.is_masked(target)) throw GraphError("denoising target must be masked");
  const auto unmasked = state.unmasked_nodes();
  return make_view(state.base(), unmasked, target, mask_token);
}

StepOutcome observed_outcome(const LabeledGraph& g, std::span<const NodeId> context, NodeId target) {
  StepOutcome out;
  out.node_type = g.node_type(target);
  out.edges.reserve(context.size());
  for (NodeId j : context) out.edges.push_back(g.edge_type(target, j));
  return out;
}

DiffusionTrajectory forward_trajectory(const LabeledGraph& g, std::span<const NodeId> ordering) {
  if (!is_permutation_of_range(ordering, g.size())) throw GraphError("ordering is not a permutation");
  DiffusionTrajectory traj;
  traj.ordering.assign(ordering.begin(), ordering.end());
  traj.states.reserve(g.size() + 1);
  traj.states.emplace_back(g);
  for (NodeId v : ordering) traj.states.push_back(absorb_node(traj.states.back(), v));
  return traj;
}

std::vector<NodeId> remaining_before(std::span<const NodeId> ordering, std::size_t n, std::size_t t) {
  std::vector<bool> absorbed(n, false);
  for (std::size_t s = 0; s + 1 < t; ++s) absorbed[ordering[s]] = true;
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!absorbed[i]) out.push_back(i);
  }
  return out;
}

}  // namespace gard
