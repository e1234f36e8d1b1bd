#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gard/model.hpp"

namespace gard {

enum class EstimatorKind { kExpectedNll, kIsMarginal, kExact };

std::string to_string(EstimatorKind k);

struct NllEstimate {
  double value = 0.0;      // nats
  double std_error = 0.0;
  std::size_t samples = 0;
  EstimatorKind kind = EstimatorKind::kExpectedNll;
};

/// -sum_t log p_theta(O_{sigma_t} | G_t) over all n reverse steps.
double trajectory_nll(const Denoiser& model, const LabeledGraph& g, std::span<const NodeId> sigma);

/// log q(sigma | G_0) under the bundle's ordering mode (uniform: -log n!).
double ordering_log_q(const ModelBundle& model, const LabeledGraph& g, std::span<const NodeId> sigma);

/// Mean NLL over S orderings drawn from q, with its Monte Carlo standard error.
NllEstimate expected_nll(const ModelBundle& model, const LabeledGraph& g, std::size_t samples, std::uint64_t seed);

/// -log (1/S) sum_s p_theta(G_0, sigma_s) / q(sigma_s), sigma_s ~ q. The
/// standard error is the delta-method error of the log estimate.
NllEstimate is_marginal_likelihood(const ModelBundle& model, const LabeledGraph& g, std::size_t samples,
                                   std::uint64_t seed);

inline constexpr std::size_t kExactEnumerationLimit = 6;

/// -log sum_sigma p_theta(G_0, sigma) by enumerating all n! orderings.
NllEstimate exact_marginal(const ModelBundle& model, const LabeledGraph& g,
                           std::size_t max_nodes = kExactEnumerationLimit);

struct KlDiagnostic {
  std::vector<NodeId> reference_ordering;
  std::vector<double> per_step;
  double total = 0.0;
};

/// Sum over steps of KL(q(sigma_t | G_0, sigma_<t) || p_hat), where p_hat is
/// the empirical distribution of which remaining node the denoiser generates
/// next given the nodes sigma_<t. Each denoiser sample is attributed to the
/// remaining nodes with exactly its type and edge pattern (split evenly among
/// ties); p_hat_k = (c_k + 1) / (samples + |candidates|), so samples matching
/// no candidate lower every p_hat_k.
KlDiagnostic ordering_kl_diagnostic(const ModelBundle& model, const LabeledGraph& g, std::size_t samples_per_step,
                                    std::uint64_t seed);

}  // namespace gard
