// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "adcrnn/network.hpp"
#include "adcrnn/rng.hpp"

namespace {

using namespace adcrnn;

Dialogue random_dialogue(const ModelConfig& cfg, std::size_t length, Rng& rng) {
  Dialogue d;
  d.id = "bench";
  for (std::size_t i = 0; i < cfg.hc_dim; ++i) d.hc.push_back(standard_normal(rng));
  for (std::size_t t = 0; t < length; ++t) {
    Utterance u;
    u.speaker = Speaker::Participant;
    for (std::size_t i = 0; i < cfg.acoustic_dim; ++i) u.acoustic.push_back(standard_normal(rng));
    for (std::size_t i = 0; i < cfg.textual_dim; ++i) u.textual.push_back(standard_normal(rng));
    d.utterances.push_back(std::move(u));
  }
  return d;
}

ModelConfig small_config() {
  ModelConfig c;
  c.d_model = 32;
  c.kernel = 5;
  c.n_se_blocks = 4;
  c.channel_schedule = {4, 8, 16};
  c.stride = 4;
  c.se_reduction = 4;
  c.lstm_layers = 1;
  c.lstm_hidden = 16;
  c.fc_reduction = 4;
  c.acoustic_dim = 16;
  c.textual_dim = 32;
  c.hc_dim = 23;
  return c;
}

// Forward in train mode and backward through both heads.
void BM_SmallModelTrainStep(benchmark::State& state) {
  Rng rng = make_rng(4, "bench");
  CrnnModel model(small_config());
  model.init_params(rng);
  const Dialogue d = random_dialogue(model.config(), static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) {
    ad::Tape tape;
    ModelGraph graph(model, tape, true);
    const auto out = graph.forward(d, true, &rng);
    tape.backward(ad::add(ad::sum(out.logits), ad::sum(out.mmse01)));
    model.params().zero_grad();
  }
}
BENCHMARK(BM_SmallModelTrainStep)->Arg(8)->Arg(32);

void BM_SmallModelPredict(benchmark::State& state) {
  Rng rng = make_rng(5, "bench");
  CrnnModel model(small_config());
  model.init_params(rng);
  const Dialogue d = random_dialogue(model.config(), static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(d));
}
BENCHMARK(BM_SmallModelPredict)->Arg(8)->Arg(32);

// Default full-size configuration, one utterance per dialogue.
void BM_FullModelPredict(benchmark::State& state) {
  Rng rng = make_rng(6, "bench");
  ModelConfig cfg;
  cfg.acoustic_dim = 64;
  cfg.textual_dim = 768;
  cfg.hc_dim = 23;
  CrnnModel model(cfg);
  model.init_params(rng);
  const Dialogue d = random_dialogue(cfg, 1, rng);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(d));
}
BENCHMARK(BM_FullModelPredict)->Unit(benchmark::kMillisecond)->Iterations(2);

}  // namespace
