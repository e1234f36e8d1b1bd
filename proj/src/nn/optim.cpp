#include "gard/nn/optim.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace gard::nn {

AdamState AdamState::for_parameters(const ParameterSet& params, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (const auto& p : params) {
    s.first_moment.emplace_back(p.value.rows(), p.value.cols());
    s.second_moment.emplace_back(p.value.rows(), p.value.cols());
  }
  return s;
}

void adam_step(ParameterSet& params, const Gradients& grads, AdamState& state) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step: parameter, gradient and state counts differ");
  }
  const auto& c = state.config;
  ++state.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].value;
    const auto& g = grads[i];
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    if (!p.same_shape(g) || !p.same_shape(m) || !p.same_shape(v)) {
      throw ShapeError("adam_step: shape mismatch for " + params[i].name);
    }
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * g[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[k] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

namespace {

struct Probe {
  double value;
  std::uint64_t branches;
};

Probe evaluate(const LossFn& loss, const ParameterSet& params) {
  Tape tape(&params, false);
  tape.track_branches(true);
  const double v = loss(tape).item();
  return {v, tape.branch_signature()};
}

}  // namespace

double grad_check(const LossFn& loss, ParameterSet& params, double eps, std::size_t max_coordinates) {
  return grad_check_report(loss, params, eps, max_coordinates).max_error;
}

GradCheckReport grad_check_report(const LossFn& loss, ParameterSet& params, double eps,
                                  std::size_t max_coordinates) {
  Gradients analytic;
  {
    Tape tape(&params, true);
    Var l = loss(tape);
    analytic = tape.backward(l);
  }
  const Probe base = evaluate(loss, params);
  const Probe again = evaluate(loss, params);
  if (base.value != again.value || base.branches != again.branches) {
    throw std::logic_error("grad_check: loss is not deterministic");
  }

  const std::size_t total = params.scalar_count();
  const std::size_t stride =
      (max_coordinates == 0 || max_coordinates >= total) ? 1 : (total + max_coordinates - 1) / max_coordinates;

  GradCheckReport report;
  report.min_step = eps;
  std::size_t flat = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& value = params[i].value;
    for (std::size_t k = 0; k < value.size(); ++k, ++flat) {
      if (flat % stride != 0) continue;
      const double saved = value[k];
      // central differences at h and h/2, extrapolated: (4 D(h/2) - D(h)) / 3
      auto central = [&](double step, bool& smooth) {
        value[k] = saved + step;
        const Probe up = evaluate(loss, params);
        value[k] = saved - step;
        const Probe down = evaluate(loss, params);
        smooth &= up.branches == base.branches && down.branches == base.branches;
        return (up.value - down.value) / (2.0 * step);
      };
      double h = eps;
      double numeric = 0.0;
      for (int tries = 0; tries < 40; ++tries, h *= 0.5) {
        bool smooth = true;
        const double wide = central(h, smooth);
        const double narrow = central(0.5 * h, smooth);
        numeric = (4.0 * narrow - wide) / 3.0;
        if (smooth) break;
      }
      value[k] = saved;
      const double err = std::abs(analytic[i][k] - numeric) / (std::abs(numeric) + 1e-8);
      report.max_error = std::max(report.max_error, err);
      report.min_step = std::min(report.min_step, h);
      ++report.coordinates;
    }
  }
  return report;
}

}  // namespace gard::nn
