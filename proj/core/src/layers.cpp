// SPDX-License-Identifier: Apache-2.0
#include "adcrnn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "adcrnn/error.hpp"

namespace adcrnn::ad {

Var self_attention_weights(Var x) {
  const Tensor& X = x.value();
  if (X.rank() != 2 || X.dim(0) == 0 || X.dim(1) == 0) {
    throw ShapeError("sdp_self_attention: expected L×d input, got " + shape_str(X.shape()));
  }
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(X.dim(1)));
  Var scores = scale(matmul(x, transpose(x)), inv_sqrt_d);
  return softmax(scores, 1);
}

Var sdp_self_attention(Var x) { return matmul(self_attention_weights(x), x); }

Var lstm_direction(Var x, const LstmWeights& w, bool reverse) {
  const Tensor& X = x.value();
  if (X.rank() != 2 || X.dim(0) == 0) {
    throw ShapeError("lstm: expected T×d input with T >= 1, got " + shape_str(X.shape()));
  }
  const Tensor& Wih = w.w_ih.value();
  const Tensor& Whh = w.w_hh.value();
  if (Wih.rank() != 2 || Wih.dim(0) != X.dim(1) || Wih.dim(1) % 4 != 0) {
    throw ShapeError("lstm: w_ih " + shape_str(Wih.shape()) + " incompatible with input " +
                     shape_str(X.shape()));
  }
  const std::size_t H = Wih.dim(1) / 4;
  if (Whh.shape() != Shape{H, 4 * H} || w.bias.value().shape() != Shape{4 * H}) {
    throw ShapeError("lstm: w_hh/bias shapes inconsistent with hidden size " + std::to_string(H));
  }
  const std::size_t T = X.dim(0);

  // Input contributions for every step at once: T×4H.
  Var pre = add(matmul(x, w.w_ih), w.bias);

  std::vector<Var> outputs(T);
  Var h{}, c{};
  bool have_state = false;
  for (std::size_t s = 0; s < T; ++s) {
    const std::size_t step = reverse ? T - 1 - s : s;
    Var gates = slice(pre, 0, step, step + 1);  // 1×4H
    if (have_state) gates = add(gates, matmul(h, w.w_hh));
    Var i = sigmoid(slice(gates, 1, 0, H));
    Var f = sigmoid(slice(gates, 1, H, 2 * H));
    Var g = tanh(slice(gates, 1, 2 * H, 3 * H));
    Var o = sigmoid(slice(gates, 1, 3 * H, 4 * H));
    c = have_state ? add(mul(f, c), mul(i, g)) : mul(i, g);
    h = mul(o, tanh(c));
    have_state = true;
    outputs[step] = h;
  }
  return concat(std::span<const Var>(outputs), 0);
}

Var lstm_layer(Var x, const LstmWeights& forward, const LstmWeights* backward) {
  Var fwd = lstm_direction(x, forward, false);
  if (!backward) return fwd;
  Var bwd = lstm_direction(x, *backward, true);
  return concat({fwd, bwd}, 1);
}

std::size_t se_bottleneck(std::size_t channels, std::size_t reduction) {
  return std::max<std::size_t>(1, channels / std::max<std::size_t>(1, reduction));
}

Var se_gates(Var u, const SeWeights& w) {
  const Tensor& U = u.value();
  if (U.rank() != 2) throw ShapeError("se_block: expected C×L input, got " + shape_str(U.shape()));
  Var squeeze = mean(u, 1);  // C
  Var hidden = relu(add(matmul(squeeze, w.fc1_w), w.fc1_b));
  return sigmoid(add(matmul(hidden, w.fc2_w), w.fc2_b));
}

Var se_block_gate(Var u, const SeWeights& w) { return scale_rows(u, se_gates(u, w)); }

}  // namespace adcrnn::ad
