// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "adcrnn/rng.hpp"
#include "adcrnn/tape.hpp"

// Differentiable dense operators. Every op checks shapes eagerly and throws
// ShapeError; backward closures accumulate into input gradients.
namespace adcrnn::ad {

/// (k)·(k×n) -> (n) or (m×k)·(k×n) -> (m×n).
Var matmul(Var a, Var b);
/// Elementwise sum. `b` may also be rank-1 matching the last axis of `a`
/// (bias broadcast).
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product of equal shapes.
Var mul(Var a, Var b);
/// Multiplies row r of a rank-2 `a` by gates[r].
Var scale_rows(Var a, Var gates);
Var scale(Var a, double c);
Var square(Var a);
/// log(max(a, floor)); the gradient is zero where the clamp is active.
Var log_clamped(Var a, double floor);

Var concat(std::span<const Var> parts, std::size_t axis);
Var concat(std::initializer_list<Var> parts, std::size_t axis);
Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end);
Var reshape(Var a, Shape shape);
/// Rank-2 transpose.
Var transpose(Var a);

Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var softmax(Var a, std::size_t axis);

/// Reductions drop `axis` from the shape. `max` routes the gradient to the
/// first maximal element.
Var sum(Var a);
Var mean(Var a, std::size_t axis);
Var max(Var a, std::size_t axis);
/// Max over the last axis (length), e.g. C×L -> C.
Var global_max_pool(Var a);

/// Inverted dropout: kept units are scaled by 1/(1-rate). Identity when
/// `train` is false or rate == 0. Requires 0 <= rate < 1.
Var dropout(Var a, double rate, bool train, Rng& rng);

struct Conv1dSpec {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// floor((length + 2*padding - kernel) / stride) + 1; throws on invalid input.
std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, Conv1dSpec spec);

/// x: C×L, w: C'×C×K, bias: C' -> C'×L' with zero padding.
Var conv1d(Var x, Var w, Var bias, Conv1dSpec spec);
Var conv1d(Var x, Var w, Conv1dSpec spec);

}  // namespace adcrnn::ad
