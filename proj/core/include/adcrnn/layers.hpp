// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "adcrnn/ops.hpp"

// Composite layers built from the primitive ops; gradients come from the tape.
namespace adcrnn::ad {

/// Row-stochastic weights softmax(X Xᵀ / sqrt(d)) for X: L×d.
Var self_attention_weights(Var x);
/// softmax(X Xᵀ / sqrt(d)) X, with X used as query, key and value.
Var sdp_self_attention(Var x);

/// One LSTM direction. Gate layout along the 4H axis is [input, forget, cell, output].
struct LstmWeights {
  Var w_ih;  // d_in × 4H
  Var w_hh;  // H × 4H
  Var bias;  // 4H
};

/// Runs a single direction over x: T×d_in with zero initial state and
/// returns T×H in the original time order.
Var lstm_direction(Var x, const LstmWeights& w, bool reverse);

/// Forward direction only (T×H), or per-step concat [forward | backward]
/// (T×2H) when `backward` is given.
Var lstm_layer(Var x, const LstmWeights& forward, const LstmWeights* backward);

/// Squeeze-and-excitation weights for C channels and bottleneck B.
struct SeWeights {
  Var fc1_w;  // C × B
  Var fc1_b;  // B
  Var fc2_w;  // B × C
  Var fc2_b;  // C
};

/// Bottleneck width for C channels at reduction ratio r: max(1, C / r).
std::size_t se_bottleneck(std::size_t channels, std::size_t reduction);

/// Channel gates sigmoid(W2·relu(W1·mean_L(u))), shape C.
Var se_gates(Var u, const SeWeights& w);
/// u: C×L scaled channel-wise by its gates.
Var se_block_gate(Var u, const SeWeights& w);

}  // namespace adcrnn::ad
