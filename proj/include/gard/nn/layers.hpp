#pragma once

#include <cstddef>
#include <random>
#include <string>

#include "gard/nn/ops.hpp"

namespace gard::nn {

/// Affine map x W + b. Holds parameter indices into a ParameterSet.
struct Linear {
  std::size_t weight = 0;
  std::size_t bias = 0;
  std::size_t in = 0;
  std::size_t out = 0;
  bool has_bias = true;

  static Linear create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                       std::mt19937_64& rng, bool with_bias = true);
  Var operator()(Tape& tape, Var x) const;
};

/// Two-layer perceptron with a ReLU in between.
struct Mlp2 {
  Linear hidden;
  Linear output;

  static Mlp2 create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t width,
                     std::size_t out, std::mt19937_64& rng);
  Var operator()(Tape& tape, Var x) const;
};

/// Gated recurrent unit:
///   r = sigmoid(m W_ir + h W_hr), z = sigmoid(m W_iz + h W_hz)
///   c = tanh(m W_in + r * (h W_hn)),  h' = (1 - z) * c + z * h
/// (each map carries a bias).
struct GruCell {
  Linear in_reset, in_update, in_cand;
  Linear hid_reset, hid_update, hid_cand;
  std::size_t dim = 0;

  static GruCell create(ParameterSet& params, const std::string& name, std::size_t input_dim,
                        std::size_t hidden_dim, std::mt19937_64& rng);
  Var operator()(Tape& tape, Var h, Var m) const;
};

Var gru_cell(Tape& tape, Var h, Var m, const GruCell& cell);

}  // namespace gard::nn
