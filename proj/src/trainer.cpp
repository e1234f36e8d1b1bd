#include "gard/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "gard/generator.hpp"
#include "gard/metrics.hpp"
#include "gard/parallel.hpp"

namespace gard {

using nn::Tape;
using nn::Var;

namespace {

constexpr std::uint64_t kTrainSalt = 0x747261696e;
constexpr std::uint64_t kValSalt = 0x76616c;
constexpr std::uint64_t kShuffleSalt = 0x736875;

Rng item_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t salt, std::size_t item) {
  return Rng(stream_seed(stream_seed(seed, stream, salt), item));
}

}  // namespace

void TrainConfig::validate() const {
  if (trajectories == 0) throw std::invalid_argument("trajectories (M) must be >= 1");
  if (!(denoiser_lr > 0.0) || !(ordering_lr > 0.0)) throw std::invalid_argument("learning rates must be > 0");
  if (train_batch == 0 || val_batch == 0) throw std::invalid_argument("batch sizes must be >= 1");
  if (baseline_decay < 0.0 || baseline_decay >= 1.0) throw std::invalid_argument("baseline_decay must be in [0, 1)");
}

std::vector<std::size_t> sample_timesteps(std::size_t n, std::size_t count, Rng& rng) {
  if (count == 0 || count > n) throw std::invalid_argument("timestep count must be in 1..n");
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i + 1;
  // partial Fisher-Yates
  for (std::size_t i = 0; i < count; ++i) std::swap(all[i], all[i + uniform_index(rng, n - i)]);
  all.resize(count);
  std::sort(all.begin(), all.end());
  return all;
}

std::size_t default_timesteps(std::size_t n, const TrainConfig& config) {
  const std::size_t t = config.timesteps == 0 ? 4 : config.timesteps;
  return std::min(n, t);
}

Var denoiser_loss(Tape& tape, const Denoiser& model, const LabeledGraph& g, const DiffusionTrajectory& trajectory,
                  std::span<const std::size_t> timesteps) {
  if (timesteps.empty()) throw std::invalid_argument("denoiser loss needs at least one timestep");
  const std::size_t n = g.size();
  if (trajectory.size() != n) throw std::invalid_argument("trajectory does not match the graph");
  std::vector<Var> terms;
  for (std::size_t t : timesteps) {
    if (t == 0 || t > n) throw std::out_of_range("timestep outside 1..n");
    const auto remaining = remaining_before(trajectory.ordering, n, t);
    std::vector<WeightedCandidate> candidates;
    if (trajectory.step_weights.size() == n) {
      candidates = trajectory.step_weights[t - 1];
    } else {
      candidates = {{trajectory.ordering[t - 1], 1.0}};
    }
    for (const auto& c : candidates) {
      std::vector<NodeId> context;
      context.reserve(remaining.size());
      for (NodeId v : remaining) {
        if (v != c.node) context.push_back(v);
      }
      const DenoisingView view = make_view(g, context, c.node, model.mask_token());
      const StepOutcome outcome = observed_outcome(g, context, c.node);
      terms.push_back(nn::scale(step_log_likelihood(tape, model, view, outcome), c.weight));
    }
  }
  const double factor = -static_cast<double>(n) / static_cast<double>(timesteps.size());
  return nn::scale(nn::sum(nn::concat_rows(terms)), factor);
}

double compute_reward(const Denoiser& model, const LabeledGraph& g, const DiffusionTrajectory& trajectory,
                      std::span<const std::size_t> timesteps) {
  Tape tape(&model.parameters(), false);
  return denoiser_loss(tape, model, g, trajectory, timesteps).item();
}

nn::Gradients reinforce_gradient(const OrderingNet& net, std::span<const ReinforceSample> samples, double baseline) {
  if (samples.empty()) throw std::invalid_argument("reinforce needs at least one trajectory");
  std::vector<nn::Gradients> per(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    Tape tape(&net.parameters());
    per[i] = tape.backward(ordering_log_prob(tape, net, *samples[i].graph, samples[i].ordering));
  });
  nn::Gradients total = nn::zero_gradients(net.parameters());
  const double inv = 1.0 / static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) nn::accumulate(total, per[i], (samples[i].reward - baseline) * inv);
  return total;
}

void reinforce_update(OrderingNet& net, nn::AdamState& state, std::span<const ReinforceSample> samples,
                      double baseline) {
  const auto grads = reinforce_gradient(net, samples, baseline);
  nn::adam_step(net.parameters(), grads, state);
}

DenoiserBatchResult denoiser_batch_gradient(const ModelBundle& model, std::span<const LabeledGraph* const> graphs,
                                            std::size_t trajectories, std::size_t top_k, const TrainConfig& config,
                                            std::uint64_t stream) {
  const std::size_t items = graphs.size() * trajectories;
  std::vector<nn::Gradients> per(items);
  std::vector<double> losses(items);
  const bool learned = model.config.ordering_mode == OrderingMode::kLearned;
  parallel_for(items, [&](std::size_t i) {
    const LabeledGraph& g = *graphs[i / trajectories];
    Rng rng = item_rng(config.seed, stream, kTrainSalt, i);
    const DiffusionTrajectory traj =
        learned ? sample_trajectory(model.ordering, g, rng, top_k) : sample_uniform_trajectory(g, rng, top_k);
    const auto ts = sample_timesteps(g.size(), default_timesteps(g.size(), config), rng);
    Tape tape(&model.denoiser.parameters());
    Var loss = denoiser_loss(tape, model.denoiser, g, traj, ts);
    losses[i] = loss.item();
    per[i] = tape.backward(loss);
  });
  DenoiserBatchResult out;
  out.grads = nn::zero_gradients(model.denoiser.parameters());
  const double inv = 1.0 / static_cast<double>(trajectories);
  for (std::size_t i = 0; i < items; ++i) {
    nn::accumulate(out.grads, per[i], inv);
    out.loss += losses[i];
  }
  out.loss *= inv;
  return out;
}

namespace {

double now_seconds() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

}  // namespace

FitResult fit(std::span<const LabeledGraph> train, std::span<const LabeledGraph> val, const TrainConfig& config,
              const ModelConfig& model_config) {
  return fit(train, val, config, ModelBundle::create(model_config, config.denoiser_lr, config.ordering_lr));
}

FitResult fit(std::span<const LabeledGraph> train, std::span<const LabeledGraph> val, const TrainConfig& config,
              ModelBundle initial) {
  config.validate();
  if (train.empty()) throw std::invalid_argument("training set is empty");
  const auto start = std::chrono::steady_clock::now();
  FitResult result{std::move(initial), {}, {}};
  ModelBundle& model = result.model;
  model.denoiser_opt.config.learning_rate = config.denoiser_lr;
  model.ordering_opt.config.learning_rate = config.ordering_lr;
  const bool learned = model.config.ordering_mode == OrderingMode::kLearned;
  const bool reinforce = learned && !val.empty();

  std::ofstream log;
  if (!config.log_path.empty()) {
    log.open(config.log_path, std::ios::trunc);
    if (!log) throw std::runtime_error("cannot open training log " + config.log_path.string());
  }
  if (!config.checkpoint_dir.empty()) std::filesystem::create_directories(config.checkpoint_dir);

  auto checkpoint = [&] {
    result.report.checkpoint_steps.push_back(model.step);
    result.checkpoints.push_back(model);
    if (!config.checkpoint_dir.empty()) {
      const auto path = config.checkpoint_dir / ("ckpt_" + std::to_string(model.step) + ".gard");
      save_model(path, model);
      result.report.checkpoint_paths.push_back(path);
    }
  };

  Rng shuffle_rng(stream_seed(config.seed, 0, kShuffleSalt));
  double baseline = 0.0;
  bool baseline_ready = false;
  std::size_t val_cursor = 0;
  std::size_t updates = 0;
  bool stop = false;

  for (std::size_t epoch = 0; epoch < config.epochs && !stop; ++epoch) {
    const auto perm = random_permutation(train.size(), shuffle_rng);
    double loss_sum = 0.0, reward_sum = 0.0;
    std::size_t loss_n = 0, reward_n = 0;
    for (std::size_t b = 0; b < perm.size(); b += config.train_batch) {
      if (config.max_steps && updates >= config.max_steps) {
        stop = true;
        break;
      }
      std::vector<const LabeledGraph*> batch;
      for (std::size_t i = b; i < std::min(perm.size(), b + config.train_batch); ++i) batch.push_back(&train[perm[i]]);

      double loss = 0.0;
      double reward = std::numeric_limits<double>::quiet_NaN();
      try {
        const auto res = denoiser_batch_gradient(model, batch, config.trajectories, config.top_k, config, model.step);
        loss = res.loss;
        if (!std::isfinite(loss)) throw nn::NumericError("loss is not finite");
        nn::adam_step(model.denoiser.parameters(), res.grads, model.denoiser_opt);

        if (reinforce) {
          std::vector<ReinforceSample> samples;
          std::vector<const LabeledGraph*> vb;
          for (std::size_t i = 0; i < std::min(config.val_batch, val.size()); ++i) {
            vb.push_back(&val[val_cursor]);
            val_cursor = (val_cursor + 1) % val.size();
          }
          samples.resize(vb.size() * config.trajectories);
          parallel_for(samples.size(), [&](std::size_t i) {
            const LabeledGraph& g = *vb[i / config.trajectories];
            Rng rng = item_rng(config.seed, model.step, kValSalt, i);
            const auto traj = sample_trajectory(model.ordering, g, rng, config.top_k);
            const auto ts = sample_timesteps(g.size(), default_timesteps(g.size(), config), rng);
            samples[i] = {&g, traj.ordering, compute_reward(model.denoiser, g, traj, ts)};
          });
          double mean_r = 0.0;
          for (const auto& s : samples) mean_r += s.reward;
          mean_r /= static_cast<double>(samples.size());
          if (!std::isfinite(mean_r)) throw nn::NumericError("reward is not finite");
          const double b_used = config.use_baseline && baseline_ready ? baseline : 0.0;
          reinforce_update(model.ordering, model.ordering_opt, samples, b_used);
          if (config.use_baseline) {
            baseline = baseline_ready ? config.baseline_decay * baseline + (1.0 - config.baseline_decay) * mean_r : mean_r;
            baseline_ready = true;
          }
          reward = mean_r;
          reward_sum += mean_r;
          ++reward_n;
        }
      } catch (const nn::NumericError& e) {
        throw TrainingDiverged("training diverged at step " + std::to_string(model.step) + " (epoch " +
                               std::to_string(epoch) + "): " + e.what());
      }
      ++model.step;
      ++updates;
      loss_sum += loss;
      ++loss_n;

      if (log) {
        nlohmann::json rec;
        rec["step"] = model.step;
        rec["epoch"] = epoch;
        rec["loss"] = loss;
        rec["reward"] = std::isfinite(reward) ? nlohmann::json(reward) : nlohmann::json(nullptr);
        rec["baseline"] = baseline;
        rec["timestamp"] = now_seconds();
        log << rec.dump() << '\n';
      }
      if (config.eval_every && model.step % config.eval_every == 0) checkpoint();
    }
    if (loss_n > 0) {
      EpochRecord rec;
      rec.epoch = epoch;
      rec.steps = model.step;
      rec.mean_loss = loss_sum / static_cast<double>(loss_n);
      rec.mean_reward = reward_n ? reward_sum / static_cast<double>(reward_n) : std::numeric_limits<double>::quiet_NaN();
      result.report.epochs.push_back(rec);
    }
    if (config.eval_every == 0 && loss_n > 0) checkpoint();
  }
  if (result.report.checkpoint_steps.empty() || result.report.checkpoint_steps.back() != model.step) checkpoint();

  result.report.selected = result.checkpoints.size() - 1;
  if (config.select_checkpoint && result.checkpoints.size() > 1 && !val.empty()) {
    result.report.selected = select_model(result.checkpoints, val, config.select_samples, config.seed);
    model = result.checkpoints[result.report.selected];
  }
  result.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::size_t select_model(std::span<const ModelBundle> checkpoints, std::span<const LabeledGraph> val,
                         std::size_t samples, std::uint64_t seed) {
  if (checkpoints.empty()) throw std::invalid_argument("no checkpoints to select from");
  if (checkpoints.size() == 1) return 0;
  if (val.empty()) throw std::invalid_argument("model selection needs validation graphs");
  GenerationConfig gen;
  gen.count = samples;
  gen.seed = stream_seed(seed, 0, 0x73656c);
  for (const auto& g : val) gen.size_pool.push_back(g.size());
  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    std::vector<LabeledGraph> graphs;
    for (auto& t : generate_batch(checkpoints[c].denoiser, gen)) graphs.push_back(std::move(t.graph));
    const double score = mmd_report(graphs, val).average();
    if (score < best_score) {
      best_score = score;
      best = c;
    }
  }
  return best;
}

}  // namespace gard
