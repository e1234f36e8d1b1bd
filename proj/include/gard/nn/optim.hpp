#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "gard/nn/tape.hpp"

namespace gard::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::size_t step = 0;

  static AdamState for_parameters(const ParameterSet& params, AdamConfig config);
};

/// Bias-corrected Adam descent step: p -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(ParameterSet& params, const Gradients& grads, AdamState& state);

using LossFn = std::function<Var(Tape&)>;

/// Largest |autodiff - central difference| / (|central difference| + 1e-8) over
/// parameter coordinates. `max_coordinates` > 0 checks an evenly strided subset.
/// The difference is Richardson-extrapolated from steps eps and eps/2. A
/// coordinate whose probes land on a different side of some relu or leaky_relu
/// kink than the base point is retried with half the step.
/// Throws std::logic_error when `loss` is not deterministic.
double grad_check(const LossFn& loss, ParameterSet& params, double eps = 1e-5,
                  std::size_t max_coordinates = 0);

struct GradCheckReport {
  double max_error = 0.0;
  double min_step = 0.0;  // shortest step any coordinate needed to avoid a kink
  std::size_t coordinates = 0;
};
GradCheckReport grad_check_report(const LossFn& loss, ParameterSet& params, double eps = 1e-5,
                                  std::size_t max_coordinates = 0);

}  // namespace gard::nn
