#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gard {

/// Raised when a graph or diffusion state would violate its invariants.
class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using NodeId = std::size_t;

/// Edge state between two nodes. 0 is ABSENT, 1.. are real edge types and
/// kMaskState marks a pair touching an absorbed node. MASK is never stored in
/// a LabeledGraph.
using EdgeState = int;
inline constexpr EdgeState kAbsent = 0;
inline constexpr EdgeState kMaskState = -1;

struct TypedEdge {
  NodeId u = 0;
  NodeId v = 0;
  int type = 1;

  friend bool operator==(const TypedEdge&, const TypedEdge&) = default;
};

/// Undirected graph with categorical node and edge types. Immutable after
/// construction; edge type 0 is reserved for "no edge".
class LabeledGraph {
 public:
  LabeledGraph() = default;

  /// Validates and builds a graph. Vocabulary limits of 0 mean "unchecked".
  static LabeledGraph create(std::vector<int> node_types, std::span<const TypedEdge> edges,
                             int node_vocab = 0, int edge_vocab = 0);

  std::size_t size() const { return node_types_.size(); }
  int node_type(NodeId i) const { return node_types_.at(i); }
  const std::vector<int>& node_types() const { return node_types_; }

  /// Edge type between i and j, kAbsent when there is no edge.
  int edge_type(NodeId i, NodeId j) const { return adj_[i * size() + j]; }
  bool has_edge(NodeId i, NodeId j) const { return edge_type(i, j) != kAbsent; }

  std::size_t degree(NodeId i) const;
  std::vector<NodeId> neighbors(NodeId i) const;
  std::size_t edge_count() const { return edge_count_; }

  /// Edges with u < v, in row-major order.
  std::vector<TypedEdge> edges() const;

  int max_node_type() const;
  int max_edge_type() const;

  friend bool operator==(const LabeledGraph&, const LabeledGraph&) = default;

 private:
  std::vector<int> node_types_;
  std::vector<std::uint8_t> adj_;
  std::size_t edge_count_ = 0;
};

/// Convenience builder for untyped graphs (node type 0, edge type 1).
LabeledGraph make_simple_graph(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges);

/// Relabels nodes: node i of `g` becomes node perm[i] of the result.
LabeledGraph permute(const LabeledGraph& g, std::span<const NodeId> perm);

std::vector<NodeId> inverse_permutation(std::span<const NodeId> perm);
bool is_permutation_of_range(std::span<const NodeId> perm, std::size_t n);

/// A diffusion state G_t over an immutable base graph. Nodes carry an
/// absorption position (1-based step index) or 0 while unabsorbed.
class MaskedGraph {
 public:
  MaskedGraph() = default;
  explicit MaskedGraph(LabeledGraph base);
  explicit MaskedGraph(std::shared_ptr<const LabeledGraph> base);

  /// A fully masked state; node i gets position n - i so slot 0 is denoised first.
  static MaskedGraph fully_masked(std::size_t n, int placeholder_type = 0);

  const LabeledGraph& base() const { return *base_; }
  const std::shared_ptr<const LabeledGraph>& base_ptr() const { return base_; }
  std::size_t size() const { return position_.size(); }
  std::size_t masked_count() const { return t_; }
  bool is_masked(NodeId i) const { return position_.at(i) != 0; }
  std::size_t absorb_position(NodeId i) const { return position_.at(i); }
  const std::vector<std::size_t>& positions() const { return position_; }

  /// Node absorbed at the given 1-based step, if any.
  NodeId node_at_position(std::size_t pos) const;

  std::vector<NodeId> unmasked_nodes() const;
  std::vector<NodeId> masked_nodes() const;

  friend bool operator==(const MaskedGraph& a, const MaskedGraph& b) {
    return a.position_ == b.position_ && a.t_ == b.t_ && *a.base_ == *b.base_;
  }

 private:
  friend MaskedGraph absorb_node(const MaskedGraph&, NodeId);
  friend MaskedGraph apply_prediction(const MaskedGraph&, NodeId, int, std::span<const EdgeState>);

  std::shared_ptr<const LabeledGraph> base_;
  std::vector<std::size_t> position_;
  std::size_t t_ = 0;
};

MaskedGraph absorb_node(const MaskedGraph& state, NodeId node);
EdgeState edge_state(const MaskedGraph& state, NodeId i, NodeId j);

/// Inverse of absorb_node for the most recently absorbed node. `edges` holds one
/// state per unmasked node in ascending node order.
MaskedGraph apply_prediction(const MaskedGraph& state, NodeId target, int node_type,
                             std::span<const EdgeState> edges);

/// The pruned input G'_t of the denoiser: every unmasked node plus one masked target.
/// Kept nodes are the unmasked nodes in ascending order followed by the target.
struct DenoisingView {
  std::vector<NodeId> kept_nodes;
  std::vector<int> tokens;         // node type, or mask_token for the target
  std::vector<EdgeState> states;   // dense kept x kept; diagonal is kAbsent
  int mask_token = 0;

  std::size_t size() const { return kept_nodes.size(); }
  std::size_t previous_count() const { return kept_nodes.size() - 1; }
  std::size_t target_index() const { return kept_nodes.size() - 1; }
  EdgeState state(std::size_t a, std::size_t b) const { return states[a * size() + b]; }
};

/// Builds the view from an explicit set of unmasked nodes (ascending) and a target.
DenoisingView make_view(const LabeledGraph& g, std::span<const NodeId> unmasked, NodeId target,
                        int mask_token);

DenoisingView denoising_view(const MaskedGraph& state, NodeId target, int mask_token);

/// Ground-truth outcome for a target given its context: node type and one edge
/// state per context node.
struct StepOutcome {
  int node_type = 0;
  std::vector<EdgeState> edges;

  friend bool operator==(const StepOutcome&, const StepOutcome&) = default;
};

StepOutcome observed_outcome(const LabeledGraph& g, std::span<const NodeId> context, NodeId target);

/// Candidate node k with its soft-label weight at one diffusion step.
struct WeightedCandidate {
  NodeId node = 0;
  double weight = 1.0;
};

/// A full forward pass G_0 -> G_n under an ordering.
struct DiffusionTrajectory {
  std::vector<NodeId> ordering;            // sigma_1..sigma_n (0-based vector)
  std::vector<MaskedGraph> states;         // states[t] has t masked nodes
  std::vector<double> step_log_probs;      // log q(sigma_t | G_0, sigma_<t)
  std::vector<std::vector<WeightedCandidate>> step_weights;

  std::size_t size() const { return ordering.size(); }
};

/// Replays an ordering through absorb_node. Log-probs and weights are left empty.
DiffusionTrajectory forward_trajectory(const LabeledGraph& g, std::span<const NodeId> ordering);

/// Nodes not absorbed before 1-based step t, i.e. sigma_t..sigma_n in ascending id order.
std::vector<NodeId> remaining_before(std::span<const NodeId> ordering, std::size_t n, std::size_t t);

}  // namespace gard
