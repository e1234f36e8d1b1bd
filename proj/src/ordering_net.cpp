#include "gard/ordering_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace gard {

using nn::Tape;
using nn::Tensor;
using nn::Var;

std::vector<double> positional_encoding(std::size_t position, std::size_t dim) {
  if (dim % 2 != 0) throw std::invalid_argument("positional encoding dimension must be even");
  if (position == 0) throw std::invalid_argument("positional encoding needs a 1-based position");
  std::vector<double> pe(dim);
  for (std::size_t i = 0; i < dim / 2; ++i) {
    const double freq = std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(dim));
    const double x = static_cast<double>(position) / freq;
    pe[2 * i] = std::sin(x);
    pe[2 * i + 1] = std::cos(x);
  }
  return pe;
}

OrderingNet::OrderingNet(const OrderingNetConfig& config, std::uint64_t seed) : config_(config) {
  if (config.node_vocab < 1 || config.layers == 0 || config.heads == 0 || config.hidden == 0) {
    throw std::invalid_argument("ordering network config needs vocab, layers, heads and hidden > 0");
  }
  if (config.position_dim % 2 != 0) throw std::invalid_argument("position_dim must be even");
  Rng rng(seed);
  const std::size_t h = config.hidden;
  type_table_ = params_.add_uniform("order/type_embed", static_cast<std::size_t>(config.node_vocab),
                                    config.type_dim, config.type_dim, rng);
  sentinel_ = params_.add_uniform("order/unabsorbed", 1, config.position_dim, config.position_dim, rng);
  input_ = nn::Linear::create(params_, "order/input", config.type_dim + config.position_dim, h, rng);
  for (std::size_t l = 0; l < config.layers; ++l) {
    Layer layer;
    const std::string base = "order/layer" + std::to_string(l);
    for (std::size_t k = 0; k < config.heads; ++k) {
      const std::string hn = base + "/head" + std::to_string(k);
      Head head;
      head.weight = params_.add_uniform(hn + "/W", h, h, h, rng);
      head.att_dst = params_.add_uniform(hn + "/a_dst", h, 1, h, rng);
      head.att_src = params_.add_uniform(hn + "/a_src", h, 1, h, rng);
      layer.heads.push_back(head);
    }
    layer.merge = nn::Linear::create(params_, base + "/merge", h * config.heads, h, rng);
    layers_.push_back(std::move(layer));
  }
  score_ = nn::Linear::create(params_, "order/score", h, 1, rng);
}

Var OrderingNet::scores(Tape& tape, const LabeledGraph& g, std::span<const std::size_t> positions) const {
  const std::size_t n = g.size();
  if (positions.size() != n) throw std::invalid_argument("positions do not cover the graph");

  std::vector<int> types(g.node_types().begin(), g.node_types().end());
  for (int t : types) {
    if (t < 0 || t >= config_.node_vocab) throw GraphError("node type outside the ordering vocabulary");
  }
  Var type_feat = nn::embedding_lookup(tape.param(type_table_), types);

  const std::size_t pd = config_.position_dim;
  Tensor fixed(n, pd, 0.0);
  Tensor unabsorbed(n, 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (positions[i] == 0) {
      unabsorbed(i, 0) = 1.0;
    } else {
      const auto pe = positional_encoding(positions[i], pd);
      std::copy(pe.begin(), pe.end(), &fixed(i, 0));
    }
  }
  Var pos_feat = nn::add(tape.constant(std::move(fixed)),
                         nn::mul(nn::broadcast_rows(tape.param(sentinel_), n), tape.constant(std::move(unabsorbed))));

  const Var parts[] = {type_feat, pos_feat};
  Var h = nn::relu(input_(tape, nn::concat_cols(parts)));

  // message edges src -> dst over G_0 plus self-loops
  std::vector<std::size_t> src, dst;
  for (std::size_t i = 0; i < n; ++i) {
    src.push_back(i);
    dst.push_back(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && g.has_edge(i, j)) {
        src.push_back(j);
        dst.push_back(i);
      }
    }
  }

  for (const auto& layer : layers_) {
    std::vector<Var> outs;
    outs.reserve(layer.heads.size());
    for (const auto& head : layer.heads) {
      Var z = nn::matmul(h, tape.param(head.weight));
      Var s_dst = nn::matmul(z, tape.param(head.att_dst));
      Var s_src = nn::matmul(z, tape.param(head.att_src));
      Var logits = nn::leaky_relu(nn::add(nn::gather_rows(s_dst, dst), nn::gather_rows(s_src, src)),
                                  config_.leaky_slope);
      Var alpha = nn::segment_softmax(logits, dst, n);
      Var msg = nn::mul(nn::gather_rows(z, src), alpha);
      outs.push_back(nn::segment_sum(msg, dst, n));
    }
    h = nn::add(h, nn::relu(layer.merge(tape, nn::concat_cols(outs))));
  }
  return score_(tape, h);
}

std::vector<std::size_t> prefix_positions(std::size_t n, std::span<const NodeId> prefix) {
  std::vector<std::size_t> pos(n, 0);
  for (std::size_t s = 0; s < prefix.size(); ++s) {
    const NodeId v = prefix[s];
    if (v >= n) throw GraphError("ordering prefix has an out-of-range node");
    if (pos[v] != 0) throw GraphError("ordering prefix repeats node " + std::to_string(v));
    pos[v] = s + 1;
  }
  return pos;
}

namespace {

std::vector<std::size_t> unabsorbed_of(const std::vector<std::size_t>& pos) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (pos[i] == 0) out.push_back(i);
  }
  return out;
}

// log q over the unabsorbed nodes, as a column aligned with `remaining`.
Var step_log_probs(Tape& tape, const OrderingNet& net, const LabeledGraph& g,
                   const std::vector<std::size_t>& pos, const std::vector<std::size_t>& remaining) {
  Var s = net.scores(tape, g, pos);
  return nn::log_softmax(nn::gather_rows(s, remaining), 0);
}

}  // namespace

std::vector<double> step_distribution(const OrderingNet& net, const LabeledGraph& g,
                                      std::span<const NodeId> absorbed_prefix) {
  const std::size_t n = g.size();
  if (absorbed_prefix.size() >= n) throw GraphError("every node is already absorbed");
  const auto pos = prefix_positions(n, absorbed_prefix);
  const auto remaining = unabsorbed_of(pos);
  Tape tape(&net.parameters(), false);
  const Tensor& lp = step_log_probs(tape, net, g, pos, remaining).value();
  std::vector<double> probs(n, 0.0);
  for (std::size_t r = 0; r < remaining.size(); ++r) probs[remaining[r]] = std::exp(lp[r]);
  return probs;
}

Var ordering_log_prob(Tape& tape, const OrderingNet& net, const LabeledGraph& g,
                      std::span<const NodeId> sigma) {
  const std::size_t n = g.size();
  if (!is_permutation_of_range(sigma, n)) throw GraphError("ordering is not a permutation");
  std::vector<std::size_t> pos(n, 0);
  std::vector<Var> terms;
  // the last step has a single candidate and contributes log 1 = 0
  for (std::size_t t = 0; t + 1 < n; ++t) {
    const auto remaining = unabsorbed_of(pos);
    Var lp = step_log_probs(tape, net, g, pos, remaining);
    const auto at = static_cast<std::size_t>(
        std::find(remaining.begin(), remaining.end(), sigma[t]) - remaining.begin());
    const std::size_t idx[] = {at};
    terms.push_back(nn::gather_elements(lp, idx));
    pos[sigma[t]] = t + 1;
  }
  if (terms.empty()) return tape.constant(Tensor::scalar(0.0));
  return nn::sum(nn::concat_rows(terms));
}

double ordering_log_prob_value(const OrderingNet& net, const LabeledGraph& g, std::span<const NodeId> sigma) {
  Tape tape(&net.parameters(), false);
  return ordering_log_prob(tape, net, g, sigma).item();
}

std::vector<WeightedCandidate> soft_label_candidates(std::span<const double> probs, NodeId sampled,
                                                     std::size_t top_k) {
  std::vector<NodeId> others;
  for (NodeId i = 0; i < probs.size(); ++i) {
    if (i != sampled && probs[i] > 0.0) others.push_back(i);
  }
  std::stable_sort(others.begin(), others.end(), [&](NodeId a, NodeId b) { return probs[a] > probs[b]; });
  const std::size_t keep = top_k == 0 ? others.size() : std::min(others.size(), top_k - 1);
  std::vector<WeightedCandidate> out{{sampled, probs[sampled]}};
  for (std::size_t i = 0; i < keep; ++i) out.push_back({others[i], probs[others[i]]});
  double total = 0.0;
  for (const auto& c : out) total += c.weight;
  for (auto& c : out) c.weight /= total;
  return out;
}

DiffusionTrajectory sample_trajectory(const OrderingNet& net, const LabeledGraph& g, Rng& rng,
                                      std::size_t top_k) {
  const std::size_t n = g.size();
  std::vector<NodeId> sigma;
  std::vector<double> log_probs;
  std::vector<std::vector<WeightedCandidate>> weights;
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<double> probs;
    if (t + 1 == n) {
      probs.assign(n, 0.0);
      for (NodeId i = 0; i < n; ++i) {
        if (std::find(sigma.begin(), sigma.end(), i) == sigma.end()) probs[i] = 1.0;
      }
    } else {
      probs = step_distribution(net, g, sigma);
    }
    const NodeId v = sample_categorical(probs, rng);
    log_probs.push_back(std::log(probs[v]));
    weights.push_back(soft_label_candidates(probs, v, top_k));
    sigma.push_back(v);
  }
  DiffusionTrajectory traj = forward_trajectory(g, sigma);
  traj.step_log_probs = std::move(log_probs);
  traj.step_weights = std::move(weights);
  return traj;
}

DiffusionTrajectory sample_uniform_trajectory(const LabeledGraph& g, Rng& rng, std::size_t top_k) {
  const std::size_t n = g.size();
  const auto sigma = random_permutation(n, rng);
  DiffusionTrajectory traj = forward_trajectory(g, sigma);
  std::vector<double> probs(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double p = 1.0 / static_cast<double>(n - t);
    std::fill(probs.begin(), probs.end(), 0.0);
    for (std::size_t s = t; s < n; ++s) probs[sigma[s]] = p;
    traj.step_log_probs.push_back(std::log(p));
    traj.step_weights.push_back(soft_label_candidates(probs, sigma[t], top_k));
  }
  return traj;
}

}  // namespace gard
