#include "gard/generator.hpp"

#include <stdexcept>

#include "gard/parallel.hpp"

namespace gard {

std::vector<NodeId> GenerationTrace::order() const {
  std::vector<NodeId> out;
  out.reserve(steps.size());
  for (const auto& s : steps) out.push_back(s.node);
  return out;
}

std::size_t sample_size(std::span<const std::size_t> sizes, Rng& rng) {
  if (sizes.empty()) throw std::invalid_argument("cannot sample a size from an empty corpus");
  return sizes[uniform_index(rng, sizes.size())];
}

DegreeCapResult enforce_degree_cap(std::span<const std::size_t> existing_degrees,
                                   std::span<const EdgeState> proposed, std::size_t d_max, Rng& rng) {
  if (d_max == 0) throw std::invalid_argument("degree cap must be at least 1");
  if (existing_degrees.size() != proposed.size()) {
    throw std::invalid_argument("degree list does not match the proposal");
  }
  DegreeCapResult out;
  out.edges.assign(proposed.begin(), proposed.end());
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < proposed.size(); ++j) {
    if (proposed[j] == kAbsent) continue;
    if (existing_degrees[j] >= d_max) {
      out.edges[j] = kAbsent;
      out.dropped.push_back(j);
    } else {
      kept.push_back(j);
    }
  }
  if (kept.size() > d_max) {
    shuffle(kept, rng);
    for (std::size_t i = d_max; i < kept.size(); ++i) {
      out.edges[kept[i]] = kAbsent;
      out.dropped.push_back(kept[i]);
    }
  }
  return out;
}

GenerationTrace generate(const Denoiser& model, std::size_t n, Rng& rng, std::optional<std::size_t> max_degree) {
  if (n == 0) throw std::invalid_argument("cannot generate an empty graph");
  MaskedGraph state = MaskedGraph::fully_masked(n);
  std::vector<std::size_t> degree(n, 0);
  GenerationTrace trace;
  for (NodeId s = 0; s < n; ++s) {
    const DenoisingView view = denoising_view(state, s, model.mask_token());
    StepOutcome outcome = sample_step(model, view, rng);
    GenerationStep step;
    step.node = s;
    step.node_type = outcome.node_type;
    if (max_degree) {
      auto capped = enforce_degree_cap(std::span(degree).first(s), outcome.edges, *max_degree, rng);
      for (std::size_t j : capped.dropped) step.dropped.emplace_back(j, outcome.edges[j]);
      outcome.edges = std::move(capped.edges);
    }
    for (std::size_t j = 0; j < s; ++j) {
      if (outcome.edges[j] != kAbsent) {
        ++degree[j];
        ++degree[s];
      }
    }
    step.edges = outcome.edges;
    state = apply_prediction(state, s, outcome.node_type, outcome.edges);
    trace.steps.push_back(std::move(step));
  }
  trace.graph = state.base();
  return trace;
}

std::vector<GenerationTrace> generate_batch(const Denoiser& model, const GenerationConfig& config) {
  if (!config.fixed_n && config.size_pool.empty() && config.count > 0) {
    throw std::invalid_argument("generation needs a fixed n or a size pool");
  }
  std::vector<GenerationTrace> out(config.count);
  parallel_for(config.count, [&](std::size_t i) {
    Rng rng(stream_seed(config.seed, i, 0x67656e));
    const std::size_t n = config.fixed_n ? *config.fixed_n : sample_size(config.size_pool, rng);
    out[i] = generate(model, n, rng, config.max_degree);
  });
  return out;
}

LabeledGraph replay_trace(const GenerationTrace& trace) {
  const std::size_t n = trace.steps.size();
  MaskedGraph state = MaskedGraph::fully_masked(n);
  for (const auto& step : trace.steps) state = apply_prediction(state, step.node, step.node_type, step.edges);
  return state.base();
}

}  // namespace gard
