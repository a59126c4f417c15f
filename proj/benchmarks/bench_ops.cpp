// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "adcrnn/layers.hpp"
#include "adcrnn/rng.hpp"
#include "adcrnn/tape.hpp"

namespace {

using namespace adcrnn;

Tensor random(Shape shape, Rng& rng, double s = 0.1) {
  Tensor t(std::move(shape));
  for (double& x : t.data()) x = s * standard_normal(rng);
  return t;
}

// Args: channels in, channels out, length, kernel, stride.
void BM_Conv1dForwardBackward(benchmark::State& state) {
  Rng rng = make_rng(1, "bench");
  const auto c_in = static_cast<std::size_t>(state.range(0));
  const auto c_out = static_cast<std::size_t>(state.range(1));
  const auto len = static_cast<std::size_t>(state.range(2));
  const auto k = static_cast<std::size_t>(state.range(3));
  const auto stride = static_cast<std::size_t>(state.range(4));
  const Tensor x = random({c_in, len}, rng), w = random({c_out, c_in, k}, rng), b = random({c_out}, rng);
  for (auto _ : state) {
    ad::Tape tape;
    ad::Var y = ad::conv1d(tape.input(x), tape.input(w), tape.input(b), {stride, k / 2});
    tape.backward(ad::sum(y));
    benchmark::DoNotOptimize(tape.grad(y));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c_in * c_out * k * len / stride));
}
BENCHMARK(BM_Conv1dForwardBackward)->Args({2, 32, 1024, 15, 1})->Args({32, 128, 256, 15, 4})->Args({128, 128, 64, 15, 1});

void BM_SelfAttention(benchmark::State& state) {
  Rng rng = make_rng(2, "bench");
  const auto len = static_cast<std::size_t>(state.range(0));
  const Tensor x = random({len, 1}, rng, 1.0);
  for (auto _ : state) {
    ad::Tape tape;
    ad::Var y = ad::sdp_self_attention(tape.input(x));
    tape.backward(ad::sum(y));
    benchmark::DoNotOptimize(tape.grad(y));
  }
}
BENCHMARK(BM_SelfAttention)->Arg(64)->Arg(256)->Arg(1024);

// Args: steps, input width, hidden.
void BM_BiLstmLayer(benchmark::State& state) {
  Rng rng = make_rng(3, "bench");
  const auto steps = static_cast<std::size_t>(state.range(0));
  const auto d = static_cast<std::size_t>(state.range(1));
  const auto h = static_cast<std::size_t>(state.range(2));
  const Tensor x = random({steps, d}, rng, 1.0);
  Tensor wf[3] = {random({d, 4 * h}, rng), random({h, 4 * h}, rng), Tensor({4 * h})};
  Tensor wb[3] = {random({d, 4 * h}, rng), random({h, 4 * h}, rng), Tensor({4 * h})};
  for (auto _ : state) {
    ad::Tape tape;
    const ad::LstmWeights f{tape.input(wf[0]), tape.input(wf[1]), tape.input(wf[2])};
    const ad::LstmWeights b{tape.input(wb[0]), tape.input(wb[1]), tape.input(wb[2])};
    ad::Var y = ad::lstm_layer(tape.input(x), f, &b);
    tape.backward(ad::sum(y));
    benchmark::DoNotOptimize(tape.grad(y));
  }
}
BENCHMARK(BM_BiLstmLayer)->Args({16, 64, 32})->Args({32, 256, 128});

}  // namespace
