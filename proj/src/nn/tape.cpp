#include "gard/nn/tape.hpp"

#include <cmath>

namespace gard::nn {

std::size_t ParameterSet::add(std::string name, Tensor init) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  params_.push_back({std::move(name), std::move(init)});
  return params_.size() - 1;
}

std::size_t ParameterSet::add_uniform(std::string name, std::size_t rows, std::size_t cols,
                                      std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  Tensor t(rows, cols);
  for (auto& x : t.data()) {
    // 53 random bits mapped to [0,1); avoids implementation-defined distributions.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    x = (2.0 * u - 1.0) * bound;
  }
  return add(std::move(name), std::move(t));
}

std::size_t ParameterSet::index(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw std::out_of_range("unknown parameter: " + std::string(name));
}

bool ParameterSet::contains(std::string_view name) const {
  for (const auto& p : params_) {
    if (p.name == name) return true;
  }
  return false;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

Gradients zero_gradients(const ParameterSet& params) {
  Gradients g;
  g.reserve(params.size());
  for (const auto& p : params) g.emplace_back(p.value.rows(), p.value.cols());
  return g;
}

void accumulate(Gradients& into, const Gradients& g, double scale) {
  if (into.size() != g.size()) throw ShapeError("gradient sets have different lengths");
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!into[i].same_shape(g[i])) throw ShapeError("gradient shape mismatch");
    auto dst = into[i].data();
    auto src = g[i].data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += scale * src[k];
  }
}

double max_abs(const Gradients& g) {
  double m = 0.0;
  for (const auto& t : g) {
    for (double x : t.data()) m = std::max(m, std::abs(x));
  }
  return m;
}

const Tensor& Var::value() const { return tape_->value(id_); }

Tape::Tape(const ParameterSet* params, bool requires_grad)
    : params_(params), requires_grad_(requires_grad) {
  if (params_) param_nodes_.assign(params_->size(), -1);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back({std::move(value), Tensor(), nullptr, false});
  return {this, nodes_.size() - 1};
}

Var Tape::param(std::size_t index) {
  if (!params_ || index >= params_->size()) throw std::out_of_range("parameter index out of range");
  if (param_nodes_[index] >= 0) return {this, static_cast<std::size_t>(param_nodes_[index])};
  nodes_.push_back({(*params_)[index].value, Tensor(), nullptr, requires_grad_});
  param_nodes_[index] = static_cast<long>(nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

Var Tape::param(std::string_view name) {
  if (!params_) throw std::out_of_range("tape has no parameter set");
  return param(params_->index(name));
}

Var Tape::push(Tensor value, std::initializer_list<Var> parents, BackwardFn fn, const char* op) {
  return push(std::move(value), std::vector<Var>(parents), std::move(fn), op);
}

Var Tape::push(Tensor value, const std::vector<Var>& parents, BackwardFn fn, const char* op) {
  for (double x : value.data()) {
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite value produced by ") + op);
  }
  bool needs = false;
  for (const auto& p : parents) {
    if (&p.tape() != this) throw std::invalid_argument("operands recorded on different tapes");
    needs = needs || nodes_[p.id()].requires_grad;
  }
  nodes_.push_back({std::move(value), Tensor(), needs ? std::move(fn) : nullptr, needs});
  return {this, nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t id) {
  auto& node = nodes_[id];
  if (node.grad.storage().empty() && node.value.size() > 0) {
    node.grad = Tensor(node.value.rows(), node.value.cols());
  }
  return node.grad;
}

Gradients Tape::backward(Var loss) {
  if (&loss.tape() != this) throw std::invalid_argument("loss is not on this tape");
  const auto& lv = value(loss.id());
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ShapeError("backward needs a scalar loss, got " + lv.shape_str());
  }
  for (auto& n : nodes_) n.grad = Tensor();
  if (nodes_[loss.id()].requires_grad) {
    grad(loss.id())[0] = 1.0;
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
      if (nodes_[id].backward && has_grad(id)) nodes_[id].backward(*this, id);
    }
  }
  Gradients out;
  if (!params_) return out;
  out.reserve(params_->size());
  for (std::size_t i = 0; i < params_->size(); ++i) {
    const auto& p = (*params_)[i].value;
    const long node = param_nodes_[i];
    if (node >= 0 && has_grad(static_cast<std::size_t>(node))) {
      out.push_back(nodes_[static_cast<std::size_t>(node)].grad);
    } else {
      out.emplace_back(p.rows(), p.cols());
    }
  }
  return out;
}

void Tape::note_branches(const Tensor& inputs) {
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    branch_signature_ = (branch_signature_ ^ (inputs[i] > 0.0 ? 1u : 0u)) * 1099511628211ull;
  }
}

}  // namespace gard::nn
