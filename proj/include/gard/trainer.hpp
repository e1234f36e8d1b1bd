#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gard/model.hpp"
#include "gard/nn/optim.hpp"

namespace gard {

struct TrainConfig {
  std::size_t trajectories = 4;   // M
  std::size_t timesteps = 0;      // T; 0 means min(n, 4)
  double denoiser_lr = 1e-4;      // eta_1
  double ordering_lr = 5e-4;      // eta_2
  std::size_t train_batch = 4;
  std::size_t val_batch = 4;
  std::size_t epochs = 1;
  std::size_t max_steps = 0;      // cap on denoiser updates, 0 = none
  std::size_t top_k = 1;          // soft-label candidates, 0 = all remaining
  bool use_baseline = true;
  double baseline_decay = 0.9;
  std::size_t eval_every = 0;     // checkpoint every this many denoiser updates; 0 = per epoch
  bool select_checkpoint = false; // return the checkpoint with the lowest validation MMD
  std::size_t select_samples = 32;
  std::uint64_t seed = 0;
  std::filesystem::path checkpoint_dir;  // empty: keep checkpoints in memory only
  std::filesystem::path log_path;        // empty: no JSON-lines log

  void validate() const;
};

/// Raised when a loss or reward becomes non-finite.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpochRecord {
  std::size_t epoch = 0;
  std::size_t steps = 0;          // cumulative denoiser updates
  double mean_loss = 0.0;
  double mean_reward = 0.0;       // NaN when no validation update ran
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::vector<std::size_t> checkpoint_steps;
  std::vector<std::filesystem::path> checkpoint_paths;
  std::size_t selected = 0;       // index into checkpoint_steps
  double wall_seconds = 0.0;
};

/// T distinct timesteps drawn uniformly from 1..n, ascending.
std::vector<std::size_t> sample_timesteps(std::size_t n, std::size_t count, Rng& rng);

std::size_t default_timesteps(std::size_t n, const TrainConfig& config);

/// -(n/T) sum_{t in timesteps} sum_k w_k log p_theta(O_k | G_t without k).
/// Candidates and weights come from the trajectory; weights are constants.
nn::Var denoiser_loss(nn::Tape& tape, const Denoiser& model, const LabeledGraph& g,
                      const DiffusionTrajectory& trajectory, std::span<const std::size_t> timesteps);

/// The same quantity without recording gradients.
double compute_reward(const Denoiser& model, const LabeledGraph& g, const DiffusionTrajectory& trajectory,
                      std::span<const std::size_t> timesteps);

struct ReinforceSample {
  const LabeledGraph* graph = nullptr;
  std::vector<NodeId> ordering;
  double reward = 0.0;
};

/// (1/M) sum_m (R_m - baseline) grad log q(sigma_m). Descending along it lowers expected R.
nn::Gradients reinforce_gradient(const OrderingNet& net, std::span<const ReinforceSample> samples, double baseline);

/// Applies one Adam descent step along reinforce_gradient.
void reinforce_update(OrderingNet& net, nn::AdamState& state, std::span<const ReinforceSample> samples,
                      double baseline);

/// Gradient of the summed loss of M trajectories per graph, divided by M.
struct DenoiserBatchResult {
  nn::Gradients grads;
  double loss = 0.0;
};
DenoiserBatchResult denoiser_batch_gradient(const ModelBundle& model, std::span<const LabeledGraph* const> graphs,
                                            std::size_t trajectories, std::size_t top_k, const TrainConfig& config,
                                            std::uint64_t stream);

/// Algorithm 1. `initial` continues from an existing bundle.
struct FitResult {
  ModelBundle model;
  TrainReport report;
  std::vector<ModelBundle> checkpoints;  // in-memory copies, aligned with report.checkpoint_steps
};
FitResult fit(std::span<const LabeledGraph> train, std::span<const LabeledGraph> val, const TrainConfig& config,
              const ModelConfig& model_config);
FitResult fit(std::span<const LabeledGraph> train, std::span<const LabeledGraph> val, const TrainConfig& config,
              ModelBundle initial);

/// Index of the checkpoint whose samples have the lowest mean of degree,
/// clustering and orbit MMD against `val`.
std::size_t select_model(std::span<const ModelBundle> checkpoints, std::span<const LabeledGraph> val,
                         std::size_t samples, std::uint64_t seed);

}  // namespace gard
