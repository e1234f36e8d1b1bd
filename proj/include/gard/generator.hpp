#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gard/denoiser.hpp"
#include "gard/graph.hpp"
#include "gard/random.hpp"

namespace gard {

struct GenerationConfig {
  std::size_t count = 0;
  std::optional<std::size_t> fixed_n;
  std::vector<std::size_t> size_pool;  // empirical sizes, used when fixed_n is unset
  std::optional<std::size_t> max_degree;
  std::uint64_t seed = 0;
};

/// One reverse step: the slot instantiated, its type, the committed edge state
/// towards every previously generated slot (in generation order), and any
/// edges the degree cap removed.
struct GenerationStep {
  NodeId node = 0;
  int node_type = 0;
  std::vector<EdgeState> edges;
  std::vector<std::pair<NodeId, EdgeState>> dropped;
};

struct GenerationTrace {
  LabeledGraph graph;
  std::vector<GenerationStep> steps;

  /// Node ids in the order they were instantiated.
  std::vector<NodeId> order() const;
};

/// Draws n from the empirical size distribution.
std::size_t sample_size(std::span<const std::size_t> sizes, Rng& rng);

struct DegreeCapResult {
  std::vector<EdgeState> edges;
  std::vector<std::size_t> dropped;  // indices into the proposal
};

/// Two-phase cap: drop proposed edges to nodes already at d_max, then keep a
/// uniformly random subset of d_max survivors if the new node still exceeds it.
DegreeCapResult enforce_degree_cap(std::span<const std::size_t> existing_degrees,
                                   std::span<const EdgeState> proposed, std::size_t d_max, Rng& rng);

/// Reverse generation from n masked slots; slot s is instantiated at step s.
GenerationTrace generate(const Denoiser& model, std::size_t n, Rng& rng,
                         std::optional<std::size_t> max_degree = std::nullopt);

/// Independent generations; sample i uses the stream (seed, i).
std::vector<GenerationTrace> generate_batch(const Denoiser& model, const GenerationConfig& config);

/// Rebuilds the graph by applying every recorded step to a fully masked state.
LabeledGraph replay_trace(const GenerationTrace& trace);

}  // namespace gard
