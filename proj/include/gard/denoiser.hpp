#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gard/graph.hpp"
#include "gard/nn/layers.hpp"
#include "gard/random.hpp"

namespace gard {

enum class Aggregator { kGat, kGruGate };

std::string to_string(Aggregator a);
Aggregator parse_aggregator(const std::string& tag);

struct DenoiserConfig {
  int node_vocab = 1;
  int edge_vocab = 2;  // includes ABSENT (state 0)
  std::size_t layers = 7;
  std::size_t hidden = 128;
  std::size_t mixtures = 20;
  Aggregator aggregator = Aggregator::kGat;
  /// "gat" only: feed edge-state embeddings into attention logits and messages.
  bool edge_attention = true;
  double leaky_slope = 0.2;

  /// Defaults for typed graphs: 5 rounds, width 256, GRU gating.
  static DenoiserConfig typed(int node_vocab, int edge_vocab);
};

/// Categorical outputs of one reverse step.
struct StepPrediction {
  std::vector<double> node_probs;  // over node types
  std::vector<double> mixture;     // alpha_k, empty when there are no previous nodes
  std::size_t previous = 0;
  std::size_t edge_states = 0;
  std::vector<double> edge_probs;  // [k][j][e] flattened

  double edge_prob(std::size_t k, std::size_t j, EdgeState e) const {
    return edge_probs[(k * previous + j) * edge_states + static_cast<std::size_t>(e)];
  }
};

/// The reverse model p_theta(G_t | G_{t+1}) evaluated on a DenoisingView.
class Denoiser {
 public:
  Denoiser() = default;
  Denoiser(const DenoiserConfig& config, std::uint64_t seed);

  const DenoiserConfig& config() const { return config_; }
  nn::ParameterSet& parameters() { return params_; }
  const nn::ParameterSet& parameters() const { return params_; }
  int mask_token() const { return config_.node_vocab; }

  struct Encoding {
    nn::Var nodes;  // m x hidden, view order
    nn::Var graph;  // 1 x hidden, mean of rows
  };
  Encoding message_pass(nn::Tape& tape, const DenoisingView& view) const;

  struct Logits {
    nn::Var node;           // 1 x V
    nn::Var mixture;        // 1 x K (log alpha), valid when previous > 0
    nn::Var edges;          // (p*K) x E log-probabilities, row j*K + k
    std::size_t previous = 0;
  };
  Logits heads(nn::Tape& tape, const DenoisingView& view) const;

  /// Pre-softmax attention logits of the first layer ("gat" only), one per
  /// message edge in the order produced by message_edges().
  nn::Tensor first_layer_attention(const DenoisingView& view) const;

 private:
  struct GatLayer {
    std::size_t weight, att_dst, att_src, att_edge, edge_proj;
  };
  struct GruLayer {
    nn::Mlp2 message;
    nn::Mlp2 gate;
    nn::GruCell update;
  };

  nn::Var gat_layer(nn::Tape& tape, const GatLayer& layer, nn::Var h, nn::Var e,
                    const std::vector<std::size_t>& src, const std::vector<std::size_t>& dst,
                    std::size_t m, nn::Var* logits_out) const;

  DenoiserConfig config_;
  nn::ParameterSet params_;
  std::size_t node_table_ = 0;
  std::size_t edge_table_ = 0;
  std::vector<GatLayer> gat_;
  std::vector<GruLayer> gru_;
  nn::Mlp2 node_head_;
  nn::Mlp2 mixture_head_;
  nn::Mlp2 edge_head_;
};

/// Directed message edges of a view: (src, dst, edge-state row in the edge table).
struct MessageEdges {
  std::vector<std::size_t> src, dst;
  std::vector<int> state_rows;
};
MessageEdges message_edges(const DenoisingView& view, int edge_vocab, bool self_loops);

StepPrediction predict_step(const Denoiser& model, const DenoisingView& view);

/// log p(node type) + log sum_k alpha_k prod_j p_k(e_j).
nn::Var step_log_likelihood(nn::Tape& tape, const Denoiser& model, const DenoisingView& view,
                            const StepOutcome& outcome);
double step_log_likelihood_value(const Denoiser& model, const DenoisingView& view,
                                 const StepOutcome& outcome);

/// Probability of an outcome under an already computed prediction.
double outcome_probability(const StepPrediction& pred, const StepOutcome& outcome);

/// Draws a node type, then one mixture component, then every edge from that
/// component. `allowed[j] == false` forces slot j to ABSENT.
StepOutcome sample_step(const Denoiser& model, const DenoisingView& view, Rng& rng,
                        std::span<const bool> allowed = {});
StepOutcome sample_from_prediction(const StepPrediction& pred, Rng& rng, std::span<const bool> allowed = {});

}  // namespace gard
