#include "gard/nn/layers.hpp"

namespace gard::nn {

Linear Linear::create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
                      std::mt19937_64& rng, bool with_bias) {
  Linear l;
  l.in = in;
  l.out = out;
  l.has_bias = with_bias;
  l.weight = params.add_uniform(name + "/W", in, out, in, rng);
  if (with_bias) l.bias = params.add_uniform(name + "/b", 1, out, in, rng);
  return l;
}

Var Linear::operator()(Tape& tape, Var x) const {
  if (x.cols() != in) {
    throw ShapeError("linear layer expects " + std::to_string(in) + " inputs, got " +
                     x.value().shape_str());
  }
  Var y = matmul(x, tape.param(weight));
  return has_bias ? add(y, tape.param(bias)) : y;
}

Mlp2 Mlp2::create(ParameterSet& params, const std::string& name, std::size_t in, std::size_t width,
                  std::size_t out, std::mt19937_64& rng) {
  return {Linear::create(params, name + "/0", in, width, rng),
          Linear::create(params, name + "/1", width, out, rng)};
}

Var Mlp2::operator()(Tape& tape, Var x) const { return output(tape, relu(hidden(tape, x))); }

GruCell GruCell::create(ParameterSet& params, const std::string& name, std::size_t input_dim,
                        std::size_t hidden_dim, std::mt19937_64& rng) {
  GruCell c;
  c.dim = hidden_dim;
  c.in_reset = Linear::create(params, name + "/ir", input_dim, hidden_dim, rng);
  c.in_update = Linear::create(params, name + "/iz", input_dim, hidden_dim, rng);
  c.in_cand = Linear::create(params, name + "/in", input_dim, hidden_dim, rng);
  c.hid_reset = Linear::create(params, name + "/hr", hidden_dim, hidden_dim, rng);
  c.hid_update = Linear::create(params, name + "/hz", hidden_dim, hidden_dim, rng);
  c.hid_cand = Linear::create(params, name + "/hn", hidden_dim, hidden_dim, rng);
  return c;
}

Var GruCell::operator()(Tape& tape, Var h, Var m) const {
  if (h.cols() != dim || h.rows() != m.rows()) {
    throw ShapeError("gru_cell: state " + h.value().shape_str() + " vs message " + m.value().shape_str());
  }
  Var r = sigmoid(add(in_reset(tape, m), hid_reset(tape, h)));
  Var z = sigmoid(add(in_update(tape, m), hid_update(tape, h)));
  Var c = nn::tanh(add(in_cand(tape, m), mul(r, hid_cand(tape, h))));
  // (1 - z) * c + z * h  ==  c + z * (h - c)
  return add(c, mul(z, sub(h, c)));
}

Var gru_cell(Tape& tape, Var h, Var m, const GruCell& cell) { return cell(tape, h, m); }

}  // namespace gard::nn
