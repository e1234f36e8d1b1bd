#include "gard/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "gard/parallel.hpp"
#include "gard/trainer.hpp"

namespace gard {

std::string to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::kExpectedNll: return "expected-nll";
    case EstimatorKind::kIsMarginal: return "is-marginal";
    case EstimatorKind::kExact: return "exact";
  }
  return "?";
}

double trajectory_nll(const Denoiser& model, const LabeledGraph& g, std::span<const NodeId> sigma) {
  const DiffusionTrajectory traj = forward_trajectory(g, sigma);
  std::vector<std::size_t> all(g.size());
  std::iota(all.begin(), all.end(), std::size_t{1});
  return compute_reward(model, g, traj, all);
}

double ordering_log_q(const ModelBundle& model, const LabeledGraph& g, std::span<const NodeId> sigma) {
  if (model.config.ordering_mode == OrderingMode::kUniform) {
    if (!is_permutation_of_range(sigma, g.size())) throw GraphError("ordering is not a permutation");
    return -std::lgamma(static_cast<double>(g.size()) + 1.0);
  }
  return ordering_log_prob_value(model.ordering, g, sigma);
}

namespace {

// Draws orderings from q with step distributions memoized by prefix.
class OrderingSampler {
 public:
  OrderingSampler(const ModelBundle& model, const LabeledGraph& g) : model_(model), g_(g) {}

  std::vector<NodeId> sample(Rng& rng) {
    const std::size_t n = g_.size();
    if (model_.config.ordering_mode == OrderingMode::kUniform) return random_permutation(n, rng);
    std::vector<NodeId> prefix;
    while (prefix.size() < n) {
      auto it = cache_.find(prefix);
      if (it == cache_.end()) {
        std::vector<double> probs;
        if (prefix.size() + 1 == n) {
          probs.assign(n, 1.0);
          for (NodeId v : prefix) probs[v] = 0.0;
        } else {
          probs = step_distribution(model_.ordering, g_, prefix);
        }
        it = cache_.emplace(prefix, std::move(probs)).first;
      }
      prefix.push_back(sample_categorical(it->second, rng));
    }
    return prefix;
  }

 private:
  const ModelBundle& model_;
  const LabeledGraph& g_;
  std::map<std::vector<NodeId>, std::vector<double>> cache_;
};

struct OrderingSamples {
  std::vector<std::vector<NodeId>> unique;
  std::vector<std::size_t> index;  // per sample, into unique
};

OrderingSamples draw_orderings(const ModelBundle& model, const LabeledGraph& g, std::size_t samples,
                               std::uint64_t seed) {
  OrderingSampler sampler(model, g);
  OrderingSamples out;
  std::map<std::vector<NodeId>, std::size_t> seen;
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng(stream_seed(seed, s, 0x6e6c6c));
    auto sigma = sampler.sample(rng);
    auto [it, fresh] = seen.emplace(sigma, out.unique.size());
    if (fresh) out.unique.push_back(std::move(sigma));
    out.index.push_back(it->second);
  }
  return out;
}

// Per unique ordering: NLL and log q, evaluated in parallel.
void evaluate_orderings(const ModelBundle& model, const LabeledGraph& g, const OrderingSamples& os,
                        std::vector<double>& nll, std::vector<double>* log_q) {
  nll.assign(os.unique.size(), 0.0);
  if (log_q) log_q->assign(os.unique.size(), 0.0);
  parallel_for(os.unique.size(), [&](std::size_t i) {
    nll[i] = trajectory_nll(model.denoiser, g, os.unique[i]);
    if (log_q) (*log_q)[i] = ordering_log_q(model, g, os.unique[i]);
  });
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

NllEstimate expected_nll(const ModelBundle& model, const LabeledGraph& g, std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("expected NLL needs at least one ordering sample");
  const auto os = draw_orderings(model, g, samples, seed);
  std::vector<double> nll;
  evaluate_orderings(model, g, os, nll, nullptr);
  double mean = 0.0;
  for (std::size_t idx : os.index) mean += nll[idx];
  mean /= static_cast<double>(samples);
  double var = 0.0;
  for (std::size_t idx : os.index) var += (nll[idx] - mean) * (nll[idx] - mean);
  NllEstimate est;
  est.kind = EstimatorKind::kExpectedNll;
  est.samples = samples;
  est.value = mean;
  est.std_error = samples > 1 ? std::sqrt(var / static_cast<double>(samples - 1) / static_cast<double>(samples)) : 0.0;
  return est;
}

NllEstimate is_marginal_likelihood(const ModelBundle& model, const LabeledGraph& g, std::size_t samples,
                                   std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("importance sampling needs at least one ordering sample");
  const auto os = draw_orderings(model, g, samples, seed);
  std::vector<double> nll, log_q;
  evaluate_orderings(model, g, os, nll, &log_q);
  std::vector<double> log_w(samples);
  for (std::size_t s = 0; s < samples; ++s) log_w[s] = -nll[os.index[s]] - log_q[os.index[s]];
  const double lse = log_sum_exp(log_w);
  NllEstimate est;
  est.kind = EstimatorKind::kIsMarginal;
  est.samples = samples;
  est.value = -(lse - std::log(static_cast<double>(samples)));
  if (samples > 1) {
    // relative standard error of the mean weight
    const double m = *std::max_element(log_w.begin(), log_w.end());
    double mean = 0.0, sq = 0.0;
    for (double lw : log_w) {
      const double w = std::exp(lw - m);
      mean += w;
      sq += w * w;
    }
    const double s = static_cast<double>(samples);
    mean /= s;
    const double var = std::max(0.0, (sq / s - mean * mean) * s / (s - 1.0));
    est.std_error = std::sqrt(var / s) / mean;
  }
  return est;
}

NllEstimate exact_marginal(const ModelBundle& model, const LabeledGraph& g, std::size_t max_nodes) {
  const std::size_t n = g.size();
  if (n > max_nodes) {
    throw std::invalid_argument("exact marginal enumerates n! orderings; n=" + std::to_string(n) +
                                " exceeds the limit " + std::to_string(max_nodes));
  }
  std::vector<std::vector<NodeId>> all;
  std::vector<NodeId> sigma(n);
  std::iota(sigma.begin(), sigma.end(), NodeId{0});
  do {
    all.push_back(sigma);
  } while (std::next_permutation(sigma.begin(), sigma.end()));
  std::vector<double> log_joint(all.size());
  parallel_for(all.size(), [&](std::size_t i) { log_joint[i] = -trajectory_nll(model.denoiser, g, all[i]); });
  NllEstimate est;
  est.kind = EstimatorKind::kExact;
  est.samples = all.size();
  est.value = -log_sum_exp(log_joint);
  return est;
}

KlDiagnostic ordering_kl_diagnostic(const ModelBundle& model, const LabeledGraph& g, std::size_t samples_per_step,
                                    std::uint64_t seed) {
  if (samples_per_step == 0) throw std::invalid_argument("KL diagnostic needs samples");
  const std::size_t n = g.size();
  KlDiagnostic out;
  {
    OrderingSampler sampler(model, g);
    Rng rng(stream_seed(seed, 0, 0x6b6c));
    out.reference_ordering = sampler.sample(rng);
  }
  const auto& sigma = out.reference_ordering;
  out.per_step.assign(n, 0.0);
  parallel_for(n, [&](std::size_t t) {
    std::vector<NodeId> context(sigma.begin(), sigma.begin() + static_cast<long>(t));
    std::sort(context.begin(), context.end());
    std::vector<NodeId> candidates(sigma.begin() + static_cast<long>(t), sigma.end());
    std::sort(candidates.begin(), candidates.end());

    std::vector<double> q(n, 0.0);
    if (model.config.ordering_mode == OrderingMode::kUniform || candidates.size() == 1) {
      for (NodeId k : candidates) q[k] = 1.0 / static_cast<double>(candidates.size());
    } else {
      q = step_distribution(model.ordering, g, std::span(sigma).first(t));
    }

    const DenoisingView view = make_view(g, context, candidates.front(), model.denoiser.mask_token());
    const StepPrediction pred = predict_step(model.denoiser, view);
    Rng rng(stream_seed(seed, t + 1, 0x6b6c));
    std::vector<double> counts(n, 0.0);
    std::vector<NodeId> matches;
    for (std::size_t s = 0; s < samples_per_step; ++s) {
      const StepOutcome o = sample_from_prediction(pred, rng);
      matches.clear();
      for (NodeId k : candidates) {
        if (g.node_type(k) != o.node_type) continue;
        bool same = true;
        for (std::size_t j = 0; j < context.size() && same; ++j) same = g.edge_type(k, context[j]) == o.edges[j];
        if (same) matches.push_back(k);
      }
      for (NodeId k : matches) counts[k] += 1.0 / static_cast<double>(matches.size());
    }
    const double denom = static_cast<double>(samples_per_step + candidates.size());
    double kl = 0.0;
    for (NodeId k : candidates) {
      if (q[k] <= 0.0) continue;
      kl += q[k] * std::log(q[k] / ((counts[k] + 1.0) / denom));
    }
    out.per_step[t] = kl;
  });
  for (double v : out.per_step) out.total += v;
  return out;
}

}  // namespace gard
