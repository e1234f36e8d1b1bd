#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "gard/denoiser.hpp"
#include "gard/nn/checkpoint.hpp"
#include "gard/nn/optim.hpp"
#include "gard/ordering_net.hpp"

namespace gard {

enum class OrderingMode { kLearned, kUniform };

std::string to_string(OrderingMode m);
OrderingMode parse_ordering_mode(const std::string& tag);

struct ModelConfig {
  OrderingNetConfig ordering;
  DenoiserConfig denoiser;
  OrderingMode ordering_mode = OrderingMode::kLearned;
  std::uint64_t seed = 0;

  /// Sets both networks' vocabularies.
  void set_vocab(int node_vocab, int edge_vocab);
};

/// Both networks with their optimizer state: everything needed to resume
/// training or to sample.
struct ModelBundle {
  ModelConfig config;
  OrderingNet ordering;
  Denoiser denoiser;
  nn::AdamState ordering_opt;
  nn::AdamState denoiser_opt;
  std::size_t step = 0;

  static ModelBundle create(const ModelConfig& config, double denoiser_lr = 1e-4, double ordering_lr = 5e-4);
};

nn::Checkpoint to_checkpoint(const ModelBundle& model);
ModelBundle from_checkpoint(const nn::Checkpoint& ckpt);

void save_model(const std::filesystem::path& path, const ModelBundle& model);
ModelBundle load_model(const std::filesystem::path& path);

}  // namespace gard
