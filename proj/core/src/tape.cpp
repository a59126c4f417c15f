// SPDX-License-Identifier: Apache-2.0
#include "adcrnn/tape.hpp"

#include <stdexcept>

#include "adcrnn/error.hpp"

namespace adcrnn::ad {

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::constant_ref(const Tensor& value) {
  Node n;
  n.value_ref = &value;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::input(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::parameter(Parameter& p) {
  Node n;
  n.value_ref = &p.value;
  n.grad_ref = &p.grad;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.value_ref ? *n.value_ref : n.value;
}

Tensor& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  Tensor& g = n.grad_ref ? *n.grad_ref : n.grad;
  const Shape& s = value(id).shape();
  if (g.shape() != s || g.size() != shape_numel(s)) g = Tensor(s);
  return g;
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(fn));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (const Var& v : inputs) {
    if (v.tape != this) throw std::logic_error("op mixes variables from different tapes");
    n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

void Tape::backward(Var loss) {
  if (backward_done_) throw std::logic_error("backward already ran on this tape");
  if (loss.tape != this) throw std::logic_error("loss belongs to another tape");
  if (value(loss.id).size() != 1) {
    throw ShapeError("backward needs a single-element loss, got " +
                     shape_str(value(loss.id).shape()));
  }
  backward_done_ = true;
  if (!nodes_[loss.id].requires_grad) return;
  grad(loss.id)[0] += 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward) continue;
    // Nodes never reached by the loss have no gradient slot yet.
    if (n.grad.empty() && !n.grad_ref) continue;
    n.backward(*this, i);
  }
}

}  // namespace adcrnn::ad
