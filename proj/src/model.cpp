#include "gard/model.hpp"

#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace gard {

std::string to_string(OrderingMode m) { return m == OrderingMode::kLearned ? "learned" : "uniform"; }

OrderingMode parse_ordering_mode(const std::string& tag) {
  if (tag == "learned") return OrderingMode::kLearned;
  if (tag == "uniform") return OrderingMode::kUniform;
  throw std::invalid_argument("unknown ordering mode '" + tag + "' (expected learned or uniform)");
}

void ModelConfig::set_vocab(int node_vocab, int edge_vocab) {
  ordering.node_vocab = node_vocab;
  denoiser.node_vocab = node_vocab;
  denoiser.edge_vocab = edge_vocab;
}

ModelBundle ModelBundle::create(const ModelConfig& config, double denoiser_lr, double ordering_lr) {
  ModelBundle m;
  m.config = config;
  m.ordering = OrderingNet(config.ordering, stream_seed(config.seed, 0, 0x6f7264));
  m.denoiser = Denoiser(config.denoiser, stream_seed(config.seed, 1, 0x64656e));
  m.ordering_opt = nn::AdamState::for_parameters(m.ordering.parameters(), {.learning_rate = ordering_lr});
  m.denoiser_opt = nn::AdamState::for_parameters(m.denoiser.parameters(), {.learning_rate = denoiser_lr});
  return m;
}

namespace {

std::size_t get_size(const nn::Checkpoint& c, const std::string& key) { return std::stoull(c.meta.at(key)); }

double get_double(const nn::Checkpoint& c, const std::string& key) { return std::strtod(c.meta.at(key).c_str(), nullptr); }

std::string hex(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", x);
  return buf;
}

}  // namespace

nn::Checkpoint to_checkpoint(const ModelBundle& model) {
  nn::Checkpoint c;
  const auto& cfg = model.config;
  c.meta["model.seed"] = std::to_string(cfg.seed);
  c.meta["model.step"] = std::to_string(model.step);
  c.meta["model.ordering_mode"] = to_string(cfg.ordering_mode);
  c.meta["order.node_vocab"] = std::to_string(cfg.ordering.node_vocab);
  c.meta["order.layers"] = std::to_string(cfg.ordering.layers);
  c.meta["order.heads"] = std::to_string(cfg.ordering.heads);
  c.meta["order.hidden"] = std::to_string(cfg.ordering.hidden);
  c.meta["order.type_dim"] = std::to_string(cfg.ordering.type_dim);
  c.meta["order.position_dim"] = std::to_string(cfg.ordering.position_dim);
  c.meta["order.leaky_slope"] = hex(cfg.ordering.leaky_slope);
  c.meta["denoise.node_vocab"] = std::to_string(cfg.denoiser.node_vocab);
  c.meta["denoise.edge_vocab"] = std::to_string(cfg.denoiser.edge_vocab);
  c.meta["denoise.layers"] = std::to_string(cfg.denoiser.layers);
  c.meta["denoise.hidden"] = std::to_string(cfg.denoiser.hidden);
  c.meta["denoise.mixtures"] = std::to_string(cfg.denoiser.mixtures);
  c.meta["denoise.aggregator"] = to_string(cfg.denoiser.aggregator);
  c.meta["denoise.edge_attention"] = cfg.denoiser.edge_attention ? "1" : "0";
  c.meta["denoise.leaky_slope"] = hex(cfg.denoiser.leaky_slope);
  nn::store_parameters(c, "order", model.ordering.parameters());
  nn::store_parameters(c, "denoise", model.denoiser.parameters());
  nn::store_adam(c, "adam_order", model.ordering.parameters(), model.ordering_opt);
  nn::store_adam(c, "adam_denoise", model.denoiser.parameters(), model.denoiser_opt);
  return c;
}

ModelBundle from_checkpoint(const nn::Checkpoint& c) {
  ModelConfig cfg;
  cfg.seed = std::stoull(c.meta.at("model.seed"));
  cfg.ordering_mode = parse_ordering_mode(c.meta.at("model.ordering_mode"));
  cfg.ordering.node_vocab = std::stoi(c.meta.at("order.node_vocab"));
  cfg.ordering.layers = get_size(c, "order.layers");
  cfg.ordering.heads = get_size(c, "order.heads");
  cfg.ordering.hidden = get_size(c, "order.hidden");
  cfg.ordering.type_dim = get_size(c, "order.type_dim");
  cfg.ordering.position_dim = get_size(c, "order.position_dim");
  cfg.ordering.leaky_slope = get_double(c, "order.leaky_slope");
  cfg.denoiser.node_vocab = std::stoi(c.meta.at("denoise.node_vocab"));
  cfg.denoiser.edge_vocab = std::stoi(c.meta.at("denoise.edge_vocab"));
  cfg.denoiser.layers = get_size(c, "denoise.layers");
  cfg.denoiser.hidden = get_size(c, "denoise.hidden");
  cfg.denoiser.mixtures = get_size(c, "denoise.mixtures");
  cfg.denoiser.aggregator = parse_aggregator(c.meta.at("denoise.aggregator"));
  cfg.denoiser.edge_attention = c.meta.at("denoise.edge_attention") == "1";
  cfg.denoiser.leaky_slope = get_double(c, "denoise.leaky_slope");

  ModelBundle m = ModelBundle::create(cfg);
  m.step = get_size(c, "model.step");
  nn::load_parameters(c, "order", m.ordering.parameters());
  nn::load_parameters(c, "denoise", m.denoiser.parameters());
  nn::load_adam(c, "adam_order", m.ordering.parameters(), m.ordering_opt);
  nn::load_adam(c, "adam_denoise", m.denoiser.parameters(), m.denoiser_opt);
  return m;
}

void save_model(const std::filesystem::path& path, const ModelBundle& model) {
  nn::write_checkpoint(path, to_checkpoint(model));
}

ModelBundle load_model(const std::filesystem::path& path) { return from_checkpoint(nn::read_checkpoint(path)); }

}  // namespace gard
