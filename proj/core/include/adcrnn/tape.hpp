// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "adcrnn/params.hpp"
#include "adcrnn/tensor.hpp"

namespace adcrnn::ad {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so creation
/// order is a topological order and backward walks it in reverse.
/// A tape is single-threaded and supports one backward pass.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(Tensor value);
  /// Non-differentiable leaf aliasing `value`, which must outlive the tape.
  Var constant_ref(const Tensor& value);
  /// Differentiable leaf owned by the tape (gradient readable via grad()).
  Var input(Tensor value);
  /// Leaf aliasing a parameter: reads its value in place and accumulates
  /// into its grad during backward. The parameter must outlive the tape.
  Var parameter(Parameter& p);

  const Tensor& value(std::size_t id) const;
  const Tensor& value(Var v) const { return value(v.id); }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  bool requires_grad(Var v) const { return requires_grad(v.id); }

  /// Gradient slot of a node, zero-allocated on first access.
  Tensor& grad(std::size_t id);
  Tensor& grad(Var v) { return grad(v.id); }

  /// Records an op result. The node requires grad iff any input does; `fn`
  /// is only kept (and later run) in that case.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn);

  /// Seeds d(loss)/d(loss) = 1 for a single-element `loss` and propagates.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    const Tensor* value_ref = nullptr;
    Tensor* grad_ref = nullptr;
    bool requires_grad = false;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

inline const Tensor& Var::value() const { return tape->value(id); }

}  // namespace adcrnn::ad
