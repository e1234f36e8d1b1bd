#include "gard/denoiser.hpp"

#include <cmath>
#include <stdexcept>

namespace gard {

using nn::Tape;
using nn::Tensor;
using nn::Var;

std::string to_string(Aggregator a) { return a == Aggregator::kGat ? "gat" : "gru-gate"; }

Aggregator parse_aggregator(const std::string& tag) {
  if (tag == "gat") return Aggregator::kGat;
  if (tag == "gru-gate") return Aggregator::kGruGate;
  throw std::invalid_argument("unknown aggregator '" + tag + "' (expected gat or gru-gate)");
}

DenoiserConfig DenoiserConfig::typed(int node_vocab, int edge_vocab) {
  DenoiserConfig c;
  c.node_vocab = node_vocab;
  c.edge_vocab = edge_vocab;
  c.layers = 5;
  c.hidden = 256;
  c.aggregator = Aggregator::kGruGate;
  return c;
}

Denoiser::Denoiser(const DenoiserConfig& config, std::uint64_t seed) : config_(config) {
  if (config.node_vocab < 1 || config.edge_vocab < 2) {
    throw std::invalid_argument("denoiser needs node_vocab >= 1 and edge_vocab >= 2");
  }
  if (config.hidden == 0 || config.mixtures == 0) throw std::invalid_argument("hidden and mixtures must be > 0");
  Rng rng(seed);
  const std::size_t h = config.hidden;
  const auto v = static_cast<std::size_t>(config.node_vocab);
  const auto e = static_cast<std::size_t>(config.edge_vocab);
  node_table_ = params_.add_uniform("denoise/node_embed", v + 1, h, h, rng);
  // rows: edge states 0..E-1, MASK, SELF
  edge_table_ = params_.add_uniform("denoise/edge_embed", e + 2, h, h, rng);
  for (std::size_t l = 0; l < config.layers; ++l) {
    const std::string base = "denoise/layer" + std::to_string(l);
    if (config.aggregator == Aggregator::kGat) {
      GatLayer g;
      g.weight = params_.add_uniform(base + "/W", h, h, h, rng);
      g.att_dst = params_.add_uniform(base + "/a_dst", h, 1, h, rng);
      g.att_src = params_.add_uniform(base + "/a_src", h, 1, h, rng);
      g.att_edge = params_.add_uniform(base + "/a_edge", h, 1, h, rng);
      g.edge_proj = params_.add_uniform(base + "/W_edge", h, h, h, rng);
      gat_.push_back(g);
    } else {
      GruLayer g;
      g.message = nn::Mlp2::create(params_, base + "/msg", 3 * h, h, h, rng);
      g.gate = nn::Mlp2::create(params_, base + "/gate", 3 * h, h, 1, rng);
      g.update = nn::GruCell::create(params_, base + "/gru", h, h, rng);
      gru_.push_back(std::move(g));
    }
  }
  node_head_ = nn::Mlp2::create(params_, "denoise/node_head", 2 * h, h, v, rng);
  mixture_head_ = nn::Mlp2::create(params_, "denoise/mixture_head", 3 * h, h, config.mixtures, rng);
  edge_head_ = nn::Mlp2::create(params_, "denoise/edge_head", 3 * h, h, config.mixtures * e, rng);
}

MessageEdges message_edges(const DenoisingView& view, int edge_vocab, bool self_loops) {
  MessageEdges me;
  const std::size_t m = view.size();
  for (std::size_t a = 0; a < m; ++a) {
    if (self_loops) {
      me.src.push_back(a);
      me.dst.push_back(a);
      me.state_rows.push_back(edge_vocab + 1);
    }
    for (std::size_t b = 0; b < m; ++b) {
      if (a == b) continue;
      const EdgeState s = view.state(a, b);
      if (s == kAbsent) continue;
      if (s != kMaskState && (s < 0 || s >= edge_vocab)) throw GraphError("edge state outside the vocabulary");
      me.src.push_back(b);
      me.dst.push_back(a);
      me.state_rows.push_back(s == kMaskState ? edge_vocab : s);
    }
  }
  return me;
}

Var Denoiser::gat_layer(Tape& tape, const GatLayer& layer, Var h, Var e, const std::vector<std::size_t>& src,
                        const std::vector<std::size_t>& dst, std::size_t m, Var* logits_out) const {
  Var z = nn::matmul(h, tape.param(layer.weight));
  Var logits = nn::add(nn::gather_rows(nn::matmul(z, tape.param(layer.att_dst)), dst),
                       nn::gather_rows(nn::matmul(z, tape.param(layer.att_src)), src));
  Var msg = nn::gather_rows(z, src);
  if (config_.edge_attention) {
    Var ew = nn::matmul(e, tape.param(layer.edge_proj));
    logits = nn::add(logits, nn::matmul(ew, tape.param(layer.att_edge)));
    msg = nn::add(msg, ew);
  }
  logits = nn::leaky_relu(logits, config_.leaky_slope);
  if (logits_out) *logits_out = logits;
  Var alpha = nn::segment_softmax(logits, dst, m);
  return nn::add(h, nn::relu(nn::segment_sum(nn::mul(msg, alpha), dst, m)));
}

Denoiser::Encoding Denoiser::message_pass(Tape& tape, const DenoisingView& view) const {
  const std::size_t m = view.size();
  if (m == 0) throw GraphError("empty denoising view");
  for (int t : view.tokens) {
    if (t < 0 || t > config_.node_vocab) throw GraphError("view token outside the node vocabulary");
  }
  Var h = nn::embedding_lookup(tape.param(node_table_), view.tokens);
  const bool gat = config_.aggregator == Aggregator::kGat;
  const MessageEdges me = message_edges(view, config_.edge_vocab, gat);
  const bool has_edges = !me.src.empty();
  Var e;
  if (has_edges) e = nn::embedding_lookup(tape.param(edge_table_), me.state_rows);

  if (gat) {
    for (const auto& layer : gat_) h = gat_layer(tape, layer, h, e, me.src, me.dst, m, nullptr);
  } else {
    for (const auto& layer : gru_) {
      Var agg;
      if (has_edges) {
        const Var parts[] = {nn::gather_rows(h, me.dst), nn::gather_rows(h, me.src), e};
        Var x = nn::concat_cols(parts);
        Var gate = nn::sigmoid(layer.gate(tape, x));
        agg = nn::segment_sum(nn::mul(layer.message(tape, x), gate), me.dst, m);
      } else {
        agg = tape.constant(Tensor(m, config_.hidden, 0.0));
      }
      h = layer.update(tape, h, agg);
    }
  }
  return {h, nn::mean_rows(h)};
}

Tensor Denoiser::first_layer_attention(const DenoisingView& view) const {
  if (config_.aggregator != Aggregator::kGat || gat_.empty()) {
    throw std::logic_error("attention logits exist only for the gat aggregator");
  }
  Tape tape(&params_, false);
  Var h = nn::embedding_lookup(tape.param(node_table_), view.tokens);
  const MessageEdges me = message_edges(view, config_.edge_vocab, true);
  Var e = nn::embedding_lookup(tape.param(edge_table_), me.state_rows);
  Var logits;
  gat_layer(tape, gat_.front(), h, e, me.src, me.dst, view.size(), &logits);
  return logits.value();
}

Denoiser::Logits Denoiser::heads(Tape& tape, const DenoisingView& view) const {
  const Encoding enc = message_pass(tape, view);
  const std::size_t p = view.previous_count();
  Var target = nn::slice_rows(enc.nodes, view.target_index(), 1);
  Logits out;
  out.previous = p;
  const Var node_in[] = {enc.graph, target};
  out.node = node_head_(tape, nn::concat_cols(node_in));
  if (p == 0) return out;
  const Var pair_in[] = {nn::broadcast_rows(enc.graph, p), nn::broadcast_rows(target, p),
                         nn::slice_rows(enc.nodes, 0, p)};
  Var x = nn::concat_cols(pair_in);
  out.mixture = nn::log_softmax(nn::sum_rows(mixture_head_(tape, x)), 1);
  const auto e = static_cast<std::size_t>(config_.edge_vocab);
  out.edges = nn::log_softmax(nn::reshape(edge_head_(tape, x), p * config_.mixtures, e), 1);
  return out;
}

StepPrediction predict_step(const Denoiser& model, const DenoisingView& view) {
  Tape tape(&model.parameters(), false);
  const auto logits = model.heads(tape, view);
  StepPrediction pred;
  const Tensor node = nn::softmax(logits.node, 1).value();
  pred.node_probs.assign(node.storage().begin(), node.storage().end());
  pred.previous = logits.previous;
  pred.edge_states = static_cast<std::size_t>(model.config().edge_vocab);
  if (pred.previous == 0) return pred;
  const std::size_t k_count = model.config().mixtures;
  const Tensor& mix = logits.mixture.value();
  for (std::size_t k = 0; k < k_count; ++k) pred.mixture.push_back(std::exp(mix[k]));
  const Tensor& le = logits.edges.value();  // row j*K + k
  pred.edge_probs.resize(k_count * pred.previous * pred.edge_states);
  for (std::size_t k = 0; k < k_count; ++k) {
    for (std::size_t j = 0; j < pred.previous; ++j) {
      for (std::size_t s = 0; s < pred.edge_states; ++s) {
        pred.edge_probs[(k * pred.previous + j) * pred.edge_states + s] = std::exp(le(j * k_count + k, s));
      }
    }
  }
  return pred;
}

namespace {

void check_outcome(const Denoiser& model, const DenoisingView& view, const StepOutcome& outcome) {
  if (outcome.edges.size() != view.previous_count()) {
    throw std::invalid_argument("observed edges cover " + std::to_string(outcome.edges.size()) +
                                " nodes, view has " + std::to_string(view.previous_count()));
  }
  if (outcome.node_type < 0 || outcome.node_type >= model.config().node_vocab) {
    throw std::invalid_argument("observed node type outside the vocabulary");
  }
  for (EdgeState e : outcome.edges) {
    if (e < 0 || e >= model.config().edge_vocab) throw std::invalid_argument("observed edge state is MASK or out of range");
  }
}

}  // namespace

Var step_log_likelihood(Tape& tape, const Denoiser& model, const DenoisingView& view, const StepOutcome& outcome) {
  check_outcome(model, view, outcome);
  const auto logits = model.heads(tape, view);
  const std::size_t node_idx[] = {static_cast<std::size_t>(outcome.node_type)};
  Var node_ll = nn::gather_elements(nn::log_softmax(logits.node, 1), node_idx);
  const std::size_t p = logits.previous;
  if (p == 0) return node_ll;
  const std::size_t k_count = model.config().mixtures;
  const auto e = static_cast<std::size_t>(model.config().edge_vocab);
  std::vector<std::size_t> flat;
  flat.reserve(p * k_count);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < k_count; ++k) {
      flat.push_back((j * k_count + k) * e + static_cast<std::size_t>(outcome.edges[j]));
    }
  }
  // per-component sum over j of log p_k(e_j): 1 x K
  Var per_component = nn::sum_rows(nn::reshape(nn::gather_elements(logits.edges, flat), p, k_count));
  return nn::add(node_ll, nn::logsumexp(nn::add(logits.mixture, per_component)));
}

double step_log_likelihood_value(const Denoiser& model, const DenoisingView& view, const StepOutcome& outcome) {
  Tape tape(&model.parameters(), false);
  return step_log_likelihood(tape, model, view, outcome).item();
}

double outcome_probability(const StepPrediction& pred, const StepOutcome& outcome) {
  double p = pred.node_probs.at(static_cast<std::size_t>(outcome.node_type));
  if (pred.previous == 0) return p;
  double mix = 0.0;
  for (std::size_t k = 0; k < pred.mixture.size(); ++k) {
    double joint = pred.mixture[k];
    for (std::size_t j = 0; j < pred.previous; ++j) joint *= pred.edge_prob(k, j, outcome.edges.at(j));
    mix += joint;
  }
  return p * mix;
}

StepOutcome sample_from_prediction(const StepPrediction& pred, Rng& rng, std::span<const bool> allowed) {
  if (!allowed.empty() && allowed.size() != pred.previous) {
    throw std::invalid_argument("edge mask length does not match the previous node count");
  }
  StepOutcome out;
  out.node_type = static_cast<int>(sample_categorical(pred.node_probs, rng));
  if (pred.previous == 0) return out;
  const std::size_t k = sample_categorical(pred.mixture, rng);
  out.edges.resize(pred.previous, kAbsent);
  for (std::size_t j = 0; j < pred.previous; ++j) {
    if (!allowed.empty() && !allowed[j]) continue;
    const std::span<const double> probs(&pred.edge_probs[(k * pred.previous + j) * pred.edge_states],
                                        pred.edge_states);
    out.edges[j] = static_cast<EdgeState>(sample_categorical(probs, rng));
  }
  return out;
}

StepOutcome sample_step(const Denoiser& model, const DenoisingView& view, Rng& rng, std::span<const bool> allowed) {
  return sample_from_prediction(predict_step(model, view), rng, allowed);
}

}  // namespace gard
