#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gard/graph.hpp"
#include "gard/nn/layers.hpp"
#include "gard/random.hpp"

namespace gard {

struct OrderingNetConfig {
  int node_vocab = 1;
  std::size_t layers = 3;
  std::size_t heads = 6;
  std::size_t hidden = 32;
  std::size_t type_dim = 16;
  std::size_t position_dim = 16;
  double leaky_slope = 0.2;
};

/// Sinusoidal encoding of a 1-based absorption position:
///   pe[2i] = sin(pos / 10000^(2i/dim)),  pe[2i+1] = cos(pos / 10000^(2i/dim)).
/// Unabsorbed nodes use a learned vector held by the network instead.
std::vector<double> positional_encoding(std::size_t position, std::size_t dim);

/// The diffusion ordering network q_phi(sigma_t | G_0, sigma_<t).
///
/// Node features are a type embedding concatenated with the positional encoding
/// of the node's own absorption position. They pass through multi-head graph
/// attention over the edges of G_0 (plus self-loops); heads are concatenated and
/// projected back to the hidden width with a residual connection. A linear map
/// gives one score per node.
class OrderingNet {
 public:
  OrderingNet() = default;
  OrderingNet(const OrderingNetConfig& config, std::uint64_t seed);

  const OrderingNetConfig& config() const { return config_; }
  nn::ParameterSet& parameters() { return params_; }
  const nn::ParameterSet& parameters() const { return params_; }

  /// n x 1 scores h^d. `positions[i]` is node i's absorption step, 0 if unabsorbed.
  nn::Var scores(nn::Tape& tape, const LabeledGraph& g, std::span<const std::size_t> positions) const;

 private:
  struct Head {
    std::size_t weight, att_dst, att_src;
  };
  struct Layer {
    std::vector<Head> heads;
    nn::Linear merge;
  };

  OrderingNetConfig config_;
  nn::ParameterSet params_;
  std::size_t type_table_ = 0;
  std::size_t sentinel_ = 0;
  nn::Linear input_;
  std::vector<Layer> layers_;
  nn::Linear score_;
};

/// Absorption positions implied by an ordering prefix.
std::vector<std::size_t> prefix_positions(std::size_t n, std::span<const NodeId> prefix);

/// Probabilities over all n nodes; absorbed nodes get exactly 0.
std::vector<double> step_distribution(const OrderingNet& net, const LabeledGraph& g,
                                      std::span<const NodeId> absorbed_prefix);

/// Differentiable log q_phi(sigma | G_0) = sum_t log q(sigma_t | G_0, sigma_<t).
nn::Var ordering_log_prob(nn::Tape& tape, const OrderingNet& net, const LabeledGraph& g,
                          std::span<const NodeId> sigma);
double ordering_log_prob_value(const OrderingNet& net, const LabeledGraph& g,
                               std::span<const NodeId> sigma);

/// Soft-label candidates for one step: the sampled node first, then the most
/// probable other remaining nodes (ties by id) up to `top_k` in total
/// (0 = all remaining). Weights are the step probabilities renormalized.
std::vector<WeightedCandidate> soft_label_candidates(std::span<const double> probs, NodeId sampled,
                                                     std::size_t top_k);

/// Samples sigma ~ q_phi and records per-step log-probabilities and soft-label
/// weights. States are filled in as well.
DiffusionTrajectory sample_trajectory(const OrderingNet& net, const LabeledGraph& g, Rng& rng,
                                      std::size_t top_k = 1);

/// Uniformly random ordering with uniform step distributions (the ablation baseline).
DiffusionTrajectory sample_uniform_trajectory(const LabeledGraph& g, Rng& rng, std::size_t top_k = 1);

}  // namespace gard
