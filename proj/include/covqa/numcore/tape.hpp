// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "covqa/numcore/tensor.hpp"

namespace covqa::numcore {

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid for the tape's lifetime.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Tensor& grad() const;  // zeros if the node never received gradient
  bool requires_grad() const;
  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  int id() const { return node_; }

 private:
  friend class Tape;
  Var(Tape* t, int n) : tape_(t), node_(n) {}

  Tape* tape_ = nullptr;
  int node_ = -1;
};

// Reverse-mode tape. Operations append nodes in execution order; backward
// walks them in exact reverse order, accumulating gradients. A tape is
// single-owner while recording.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, bool requires_grad = false) {
    return push(std::move(value), requires_grad, nullptr);
  }

  // backward callback receives (tape, own node id); it reads grad(id) and
  // accumulates into parent nodes.
  Var make(Tensor value, bool requires_grad, std::function<void(Tape&, int)> backward) {
    if (value.has_nan()) throw std::runtime_error("Tape: operation produced NaN");
    return push(std::move(value), requires_grad, requires_grad ? std::move(backward) : nullptr);
  }

  void backward(const Var& loss) {
    if (loss.tape() != this || loss.id() < 0) throw std::invalid_argument("backward: tensor not on this tape");
    if (loss.value().size() != 1) throw std::invalid_argument("backward: loss is not scalar");
    grad(loss.id())[0] += 1.0;
    for (int id = loss.id(); id >= 0; --id) {
      Node& n = nodes_[static_cast<size_t>(id)];
      if (n.requires_grad && n.grad_set && n.back) n.back(*this, id);
    }
  }

  int size() const { return static_cast<int>(nodes_.size()); }

  const Tensor& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }

  bool wants_grad(int id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }

  bool grad_set(int id) const { return nodes_[static_cast<size_t>(id)].grad_set; }

  Tensor& grad(int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.grad_set) {
      n.grad = Tensor(n.value.shape());
      n.grad_set = true;
    }
    return n.grad;
  }

  void accumulate(int id, const Tensor& g) {
    Tensor& dst = grad(id);
    if (!dst.same_shape(g)) throw std::logic_error("Tape: gradient shape mismatch");
    for (int i = 0; i < g.size(); ++i) dst[i] += g[i];
  }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_set = false;
    std::function<void(Tape&, int)> back;
  };

  Var push(Tensor value, bool requires_grad, std::function<void(Tape&, int)> back) {
    nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad, false, std::move(back)});
    return Var(this, static_cast<int>(nodes_.size()) - 1);
  }

  std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const {
  if (!tape_) throw std::logic_error("Var: empty handle");
  return tape_->value(node_);
}

inline const Tensor& Var::grad() const {
  if (!tape_) throw std::logic_error("Var: empty handle");
  return tape_->grad(node_);
}

inline bool Var::requires_grad() const { return tape_ && tape_->wants_grad(node_); }

}  // namespace covqa::numcore
