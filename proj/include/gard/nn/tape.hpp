#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gard/nn/tensor.hpp"

namespace gard::nn {

struct Parameter {
  std::string name;
  Tensor value;

  friend bool operator==(const Parameter&, const Parameter&) = default;
};

/// Ordered, named collection of trainable tensors. Indices are stable.
class ParameterSet {
 public:
  std::size_t add(std::string name, Tensor init);

  /// Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  std::size_t add_uniform(std::string name, std::size_t rows, std::size_t cols, std::size_t fan_in,
                          std::mt19937_64& rng);

  std::size_t index(std::string_view name) const;
  bool contains(std::string_view name) const;

  Parameter& operator[](std::size_t i) { return params_.at(i); }
  const Parameter& operator[](std::size_t i) const { return params_.at(i); }
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

 private:
  std::vector<Parameter> params_;
};

/// One gradient tensor per parameter, aligned with the ParameterSet.
using Gradients = std::vector<Tensor>;

Gradients zero_gradients(const ParameterSet& params);
void accumulate(Gradients& into, const Gradients& g, double scale = 1.0);
double max_abs(const Gradients& g);

class Tape;

/// Handle to a value recorded on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  double item() const { return value().item(); }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records operations for reverse-mode differentiation. Nodes are appended in
/// evaluation order, so reverse creation order is a reverse topological order.
/// A tape is single-threaded; the bound ParameterSet must outlive it.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(const ParameterSet* params = nullptr, bool requires_grad = true);

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var param(std::size_t index);
  Var param(std::string_view name);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool recording() const { return requires_grad_; }
  std::size_t size() const { return nodes_.size(); }
  const ParameterSet* parameters() const { return params_; }

  /// Appends a node. `parents` decide whether it requires a gradient; the
  /// backward function is dropped when none of them do.
  Var push(Tensor value, std::initializer_list<Var> parents, BackwardFn fn, const char* op);
  Var push(Tensor value, const std::vector<Var>& parents, BackwardFn fn, const char* op);

  /// Gradient buffer of a node, allocated (zeroed) on first access.
  Tensor& grad(std::size_t id);
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.storage().empty(); }

  /// Reverse sweep from a 1x1 loss; returns d loss / d param for every
  /// registered parameter (exact zeros for parameters the loss ignores).
  Gradients backward(Var loss);

  /// When enabled, piecewise-linear ops fold the side of the kink each input
  /// falls on into a signature. Two evaluations with equal signatures took the
  /// same linear piece everywhere.
  void track_branches(bool on) { track_branches_ = on; }
  bool tracking_branches() const { return track_branches_; }
  void note_branches(const Tensor& inputs);
  std::uint64_t branch_signature() const { return branch_signature_; }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  const ParameterSet* params_;
  bool requires_grad_;
  std::vector<Node> nodes_;
  std::vector<long> param_nodes_;
  bool track_branches_ = false;
  std::uint64_t branch_signature_ = 14695981039346656037ull;
};

}  // namespace gard::nn
