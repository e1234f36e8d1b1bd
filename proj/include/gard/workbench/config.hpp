#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "gard/model.hpp"
#include "gard/trainer.hpp"

namespace gard::workbench {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a `train` run needs. Loaded from an INI file:
///
///   seed = 7                      ; mandatory
///   [data]
///   corpus = graphs.jsonl         ; split 80/20, validation carved from the 80
///   val_fraction = 0.2            ; 0.25 reproduces the alternative carve-out
///   [model]
///   ordering = learned            ; learned | uniform
///   ordering_layers = 3  ordering_heads = 6  ordering_hidden = 32
///   ordering_type_dim = 16  ordering_position_dim = 16
///   aggregator = gat              ; gat | gru-gate
///   layers = 7  hidden = 128  mixtures = 20  edge_attention = true
///   [train]
///   trajectories = 4  timesteps = 0  denoiser_lr = 1e-4  ordering_lr = 5e-4
///   train_batch = 4  val_batch = 4  epochs = 10  max_steps = 0  top_k = 1
///   baseline = true  baseline_decay = 0.9  eval_every = 0
///   select_checkpoint = true  select_samples = 32
///   [output]
///   dir = runs/example            ; checkpoints, log, model and splits go here
///
/// Relative paths resolve against the config file's directory. Unknown keys
/// are errors.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path corpus;
  double val_fraction = 0.2;
  ModelConfig model;
  TrainConfig train;
  std::filesystem::path output_dir;
};

RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = ".");

}  // namespace gard::workbench
