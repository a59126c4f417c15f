// SPDX-License-Identifier: Apache-2.0
#include "adcrnn/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>

#include <json.hpp>

#include "adcrnn/checkpoint.hpp"
#include "adcrnn/error.hpp"
#include "json_util.hpp"

namespace adcrnn {

using nlohmann::json;

// ---- config -----------------------------------------------------------------

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("model config: " + msg); };
  if (d_model == 0) fail("d_model must be positive");
  if (kernel == 0) fail("kernel must be positive");
  if (stride == 0 || stride_every == 0) fail("stride and stride_every must be positive");
  if (n_modalities() == 0) fail("at least one of acoustic/textual must be enabled");
  if (use_acoustic && acoustic_dim > d_model) fail("d_model must be >= acoustic_dim");
  if (use_textual && textual_dim > d_model) fail("d_model must be >= textual_dim");
  if (use_acoustic && acoustic_dim == 0) fail("acoustic_dim must be positive");
  if (use_textual && textual_dim == 0) fail("textual_dim must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (channel_schedule.empty()) fail("channel_schedule is empty");
  if (channel_schedule.size() < 1 + n_se_blocks / stride_every) {
    fail("channel_schedule needs " + std::to_string(1 + n_se_blocks / stride_every) + " entries");
  }
  if (std::find(channel_schedule.begin(), channel_schedule.end(), 0u) != channel_schedule.end()) {
    fail("channel_schedule entries must be positive");
  }
  if (lstm_layers == 0 || lstm_hidden == 0) fail("lstm_layers and lstm_hidden must be positive");
  if (fc_reduction == 0) fail("fc_reduction must be positive");
  const std::size_t t0 = 2 * lstm_hidden + (use_hc ? hc_dim : 0);
  if (t0 / fc_reduction / fc_reduction == 0) fail("FC trunk collapses to zero width");
}

std::string ModelConfig::to_json() const {
  json j{{"d_model", d_model},
         {"kernel", kernel},
         {"n_se_blocks", n_se_blocks},
         {"channel_schedule", channel_schedule},
         {"stride_every", stride_every},
         {"stride", stride},
         {"se_reduction", se_reduction},
         {"lstm_layers", lstm_layers},
         {"lstm_hidden", lstm_hidden},
         {"fc_reduction", fc_reduction},
         {"dropout", dropout},
         {"use_acoustic", use_acoustic},
         {"use_textual", use_textual},
         {"use_hc", use_hc},
         {"use_pos", use_pos},
         {"use_attention", use_attention},
         {"acoustic_dim", acoustic_dim},
         {"textual_dim", textual_dim},
         {"hc_dim", hc_dim}};
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  ModelConfig c;
  try {
    const json j = json::parse(text);
    c.d_model = j.value("d_model", c.d_model);
    c.kernel = j.value("kernel", c.kernel);
    c.n_se_blocks = j.value("n_se_blocks", c.n_se_blocks);
    c.channel_schedule = j.value("channel_schedule", c.channel_schedule);
    c.stride_every = j.value("stride_every", c.stride_every);
    c.stride = j.value("stride", c.stride);
    c.se_reduction = j.value("se_reduction", c.se_reduction);
    c.lstm_layers = j.value("lstm_layers", c.lstm_layers);
    c.lstm_hidden = j.value("lstm_hidden", c.lstm_hidden);
    c.fc_reduction = j.value("fc_reduction", c.fc_reduction);
    c.dropout = j.value("dropout", c.dropout);
    c.use_acoustic = j.value("use_acoustic", c.use_acoustic);
    c.use_textual = j.value("use_textual", c.use_textual);
    c.use_hc = j.value("use_hc", c.use_hc);
    c.use_pos = j.value("use_pos", c.use_pos);
    c.use_attention = j.value("use_attention", c.use_attention);
    c.acoustic_dim = j.value("acoustic_dim", c.acoustic_dim);
    c.textual_dim = j.value("textual_dim", c.textual_dim);
    c.hc_dim = j.value("hc_dim", c.hc_dim);
  } catch (const json::exception& e) {
    throw DataError(std::string("model config: ") + e.what());
  }
  return c;
}

// ---- architecture trace -----------------------------------------------------

namespace {

std::vector<std::size_t> dedupe(std::vector<std::size_t> v) {
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

bool block_downsamples(const ModelConfig& cfg, std::size_t block) {  // 1-based
  return block % cfg.stride_every == 0;
}

}  // namespace

std::vector<std::size_t> ArchitectureTrace::length_transitions() const {
  std::vector<std::size_t> v;
  for (const auto& s : stages) v.push_back(s.length);
  return dedupe(std::move(v));
}

std::vector<std::size_t> ArchitectureTrace::channel_transitions() const {
  std::vector<std::size_t> v;
  for (const auto& s : stages) v.push_back(s.channels);
  return dedupe(std::move(v));
}

ArchitectureTrace trace_architecture(const ModelConfig& cfg) {
  cfg.validate();
  ArchitectureTrace tr;
  const ad::Conv1dSpec same{1, cfg.padding()};
  std::size_t channels = cfg.cnn_input_channels();
  std::size_t length = cfg.d_model;
  tr.stages.push_back({"input", channels, length});
  channels = cfg.channel_schedule[0];
  length = ad::conv1d_output_length(length, cfg.kernel, same);
  tr.stages.push_back({"stem", channels, length});
  for (std::size_t b = 1; b <= cfg.n_se_blocks; ++b) {
    length = ad::conv1d_output_length(length, cfg.kernel, same);
    if (block_downsamples(cfg, b)) {
      channels = cfg.channel_schedule[b / cfg.stride_every];
      length = ad::conv1d_output_length(length, cfg.kernel, {cfg.stride, cfg.padding()});
    } else {
      length = ad::conv1d_output_length(length, cfg.kernel, same);
    }
    tr.stages.push_back({"block" + std::to_string(b), channels, length});
  }
  const std::size_t t0 = 2 * cfg.lstm_hidden + (cfg.use_hc ? cfg.hc_dim : 0);
  tr.trunk = {t0, t0 / cfg.fc_reduction, t0 / cfg.fc_reduction / cfg.fc_reduction};
  return tr;
}

// ---- model ------------------------------------------------------------------

void CrnnModel::add_param(const std::string& name, Shape shape, std::size_t fan_in) {
  params_.add(name, std::move(shape));
  init_plan_.push_back({name, fan_in});
}

CrnnModel::CrnnModel(ModelConfig cfg) : cfg_(std::move(cfg)), trace_(trace_architecture(cfg_)) {
  const std::size_t D = cfg_.d_model;
  const std::size_t K = cfg_.kernel;
  if (cfg_.use_acoustic) {
    add_param("proj.acoustic.weight", {cfg_.acoustic_dim, D}, cfg_.acoustic_dim);
    add_param("proj.acoustic.bias", {D}, 0);
  }
  if (cfg_.use_textual) {
    add_param("proj.textual.weight", {cfg_.textual_dim, D}, cfg_.textual_dim);
    add_param("proj.textual.bias", {D}, 0);
  }
  add_param("speaker.embedding", {2, D}, 2);

  const std::size_t c_in = cfg_.cnn_input_channels();
  const std::size_t c_stem = cfg_.channel_schedule[0];
  add_param("stem.weight", {c_stem, c_in, K}, c_in * K);
  add_param("stem.bias", {c_stem}, 0);

  for (std::size_t b = 1; b <= cfg_.n_se_blocks; ++b) {
    const std::size_t c = trace_.stages[b].channels;  // stage b is the previous block/stem
    const std::size_t c_out = trace_.stages[b + 1].channels;
    const std::size_t r = ad::se_bottleneck(c, cfg_.se_reduction);
    const std::string p = "block" + std::to_string(b) + ".";
    add_param(p + "conv1.weight", {c, c, K}, c * K);
    add_param(p + "conv1.bias", {c}, 0);
    add_param(p + "se.fc1.weight", {c, r}, c);
    add_param(p + "se.fc1.bias", {r}, 0);
    add_param(p + "se.fc2.weight", {r, c}, r);
    add_param(p + "se.fc2.bias", {c}, 0);
    add_param(p + "conv2.weight", {c_out, c, K}, c * K);
    add_param(p + "conv2.bias", {c_out}, 0);
  }

  const std::size_t H = cfg_.lstm_hidden;
  for (std::size_t l = 0; l < cfg_.lstm_layers; ++l) {
    const std::size_t d_in = l == 0 ? trace_.embedding_dim() : 2 * H;
    for (const char* dir : {"fwd", "bwd"}) {
      const std::string p = "lstm.layer" + std::to_string(l) + "." + dir + ".";
      add_param(p + "w_ih", {d_in, 4 * H}, d_in);
      add_param(p + "w_hh", {H, 4 * H}, H);
      add_param(p + "bias", {4 * H}, 0);
    }
  }

  const auto& t = trace_.trunk;
  add_param("fc1.weight", {t[0], t[1]}, t[0]);
  add_param("fc1.bias", {t[1]}, 0);
  add_param("fc2.weight", {t[1], t[2]}, t[1]);
  add_param("fc2.bias", {t[2]}, 0);
  add_param("head.cls.weight", {t[2], 2}, t[2]);
  add_param("head.cls.bias", {2}, 0);
  add_param("head.reg.weight", {t[2], 1}, t[2]);
  add_param("head.reg.bias", {1}, 0);
}

void CrnnModel::init_params(Rng& rng) {
  std::vector<FanIn> plan = init_plan_;
  std::sort(plan.begin(), plan.end(), [](const FanIn& a, const FanIn& b) { return a.name < b.name; });
  for (const FanIn& f : plan) {
    Tensor& v = params_.get(f.name).value;
    if (f.fan_in == 0) {
      v.fill(0.0);
      continue;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(f.fan_in));
    for (double& x : v.data()) x = (2.0 * uniform01(rng) - 1.0) * bound;
  }
}

void CrnnModel::check_inputs(const Dialogue& d) const {
  if (d.utterances.empty()) throw DataError("dialogue '" + d.id + "' has no utterances");
  for (const Utterance& u : d.utterances) {
    if (cfg_.use_acoustic && u.acoustic.size() != cfg_.acoustic_dim) {
      throw DataError("dialogue '" + d.id + "': acoustic dim " + std::to_string(u.acoustic.size()) +
                      " does not match model (" + std::to_string(cfg_.acoustic_dim) + ")");
    }
    if (cfg_.use_textual && u.textual.size() != cfg_.textual_dim) {
      throw DataError("dialogue '" + d.id + "': textual dim " + std::to_string(u.textual.size()) +
                      " does not match model (" + std::to_string(cfg_.textual_dim) + ")");
    }
  }
  if (cfg_.use_hc && d.hc.size() != cfg_.hc_dim) {
    throw DataError("dialogue '" + d.id + "': HC dim " + std::to_string(d.hc.size()) +
                    " does not match model (" + std::to_string(cfg_.hc_dim) + ")");
  }
}

double ad_probability(const Tensor& logits) {
  if (logits.size() != 2) throw ShapeError("expected two logits");
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m), e1 = std::exp(logits[1] - m);
  return e1 / (e0 + e1);
}

Prediction CrnnModel::predict(const Dialogue& d) const {
  check_inputs(d);
  ad::Tape tape;
  ModelGraph graph(*this, tape);
  const DialogueOutput out = graph.forward(d, false, nullptr);
  return {ad_probability(out.logits.value()), kMmseMax * out.mmse01.value()[0]};
}

// ---- graph ------------------------------------------------------------------

ModelGraph::ModelGraph(const CrnnModel& model, ad::Tape& tape) { bind(model, tape, false, nullptr); }

ModelGraph::ModelGraph(CrnnModel& model, ad::Tape& tape, bool trainable) {
  bind(model, tape, trainable, &model);
}

ad::Var ModelGraph::param(const std::string& name) {
  if (trainable_) return tape_->parameter(mutable_model_->params().get(name));
  return tape_->constant_ref(model_->params().get(name).value);
}

void ModelGraph::bind(const CrnnModel& model, ad::Tape& tape, bool trainable, CrnnModel* mutable_model) {
  model_ = &model;
  mutable_model_ = mutable_model;
  tape_ = &tape;
  trainable_ = trainable;
  const ModelConfig& cfg = model.config();
  if (cfg.use_acoustic) proj_acoustic_ = Dense{param("proj.acoustic.weight"), param("proj.acoustic.bias")};
  if (cfg.use_textual) proj_textual_ = Dense{param("proj.textual.weight"), param("proj.textual.bias")};
  speaker_ = param("speaker.embedding");
  stem_ = {param("stem.weight"), param("stem.bias")};
  for (std::size_t b = 1; b <= cfg.n_se_blocks; ++b) {
    const std::string p = "block" + std::to_string(b) + ".";
    Block blk;
    blk.conv1_w = param(p + "conv1.weight");
    blk.conv1_b = param(p + "conv1.bias");
    blk.se = {param(p + "se.fc1.weight"), param(p + "se.fc1.bias"), param(p + "se.fc2.weight"),
              param(p + "se.fc2.bias")};
    blk.conv2_w = param(p + "conv2.weight");
    blk.conv2_b = param(p + "conv2.bias");
    blk.stride = block_downsamples(cfg, b) ? cfg.stride : 1;
    blocks_.push_back(blk);
  }
  for (std::size_t l = 0; l < cfg.lstm_layers; ++l) {
    const std::string p = "lstm.layer" + std::to_string(l) + ".";
    LstmStack s;
    s.fwd = {param(p + "fwd.w_ih"), param(p + "fwd.w_hh"), param(p + "fwd.bias")};
    s.bwd = {param(p + "bwd.w_ih"), param(p + "bwd.w_hh"), param(p + "bwd.bias")};
    lstm_.push_back(s);
  }
  fc1_ = {param("fc1.weight"), param("fc1.bias")};
  fc2_ = {param("fc2.weight"), param("fc2.bias")};
  head_cls_ = {param("head.cls.weight"), param("head.cls.bias")};
  head_reg_ = {param("head.reg.weight"), param("head.reg.bias")};
}

std::vector<ad::Var> ModelGraph::project_inputs(const Utterance& u, bool train, Rng* dropout_rng) {
  const ModelConfig& cfg = model_->config();
  const bool apply_dropout = train && cfg.dropout > 0.0;
  if (apply_dropout && dropout_rng == nullptr) throw std::logic_error("training forward needs a dropout RNG");
  std::vector<ad::Var> streams;
  auto project = [&](const std::vector<double>& raw, std::size_t dim, const Dense& proj, const char* what) {
    if (raw.size() != dim) {
      throw ShapeError(std::string("project_inputs: ") + what + " dim " + std::to_string(raw.size()) +
                       " != " + std::to_string(dim));
    }
    ad::Var x = tape_->constant(Tensor::vector(raw));
    if (apply_dropout) x = ad::dropout(x, cfg.dropout, true, *dropout_rng);
    streams.push_back(ad::add(ad::matmul(x, proj.w), proj.b));
  };
  if (cfg.use_acoustic) project(u.acoustic, cfg.acoustic_dim, *proj_acoustic_, "acoustic");
  if (cfg.use_textual) project(u.textual, cfg.textual_dim, *proj_textual_, "textual");
  const std::size_t row = u.speaker == Speaker::Participant ? 1 : 0;
  streams.push_back(ad::reshape(ad::slice(speaker_, 0, row, row + 1), {cfg.d_model}));
  return streams;
}

ad::Var ModelGraph::encode_utterance(std::span<const ad::Var> streams) {
  const ModelConfig& cfg = model_->config();
  const ArchitectureTrace& tr = model_->trace();
  const std::size_t D = cfg.d_model;
  if (streams.size() != cfg.cnn_input_channels()) {
    throw ShapeError("encode_utterance: expected " + std::to_string(cfg.cnn_input_channels()) +
                     " streams, got " + std::to_string(streams.size()));
  }
  std::vector<ad::Var> rows;
  for (std::size_t i = 0; i < streams.size(); ++i) {
    ad::Var s = streams[i];
    if (s.value().size() != D) throw ShapeError("encode_utterance: stream width != d_model");
    const bool is_speaker = i + 1 == streams.size();
    if (cfg.use_attention && !is_speaker) {
      s = ad::sdp_self_attention(ad::reshape(s, {D, 1}));
    }
    rows.push_back(ad::reshape(s, {1, D}));
  }
  ad::Var x = ad::concat(std::span<const ad::Var>(rows), 0);

  auto expect = [&](ad::Var v, std::size_t stage) {
    const auto& st = tr.stages[stage];
    if (v.shape() != Shape{st.channels, st.length}) {
      throw std::logic_error("stage " + st.name + " produced " + shape_str(v.shape()) + ", trace says " +
                             shape_str({st.channels, st.length}));
    }
  };
  expect(x, 0);

  const ad::Conv1dSpec same{1, cfg.padding()};
  x = ad::relu(ad::conv1d(x, stem_.w, stem_.b, same));
  expect(x, 1);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const Block& blk = blocks_[b];
    ad::Var h = ad::relu(ad::conv1d(x, blk.conv1_w, blk.conv1_b, same));
    h = ad::se_block_gate(h, blk.se);
    x = ad::relu(ad::conv1d(h, blk.conv2_w, blk.conv2_b, {blk.stride, cfg.padding()}));
    expect(x, b + 2);
  }
  return ad::global_max_pool(x);
}

DialogueOutput ModelGraph::encode_dialogue(ad::Var utterance_embeddings, const std::vector<double>& hc) {
  const ModelConfig& cfg = model_->config();
  ad::Var x = utterance_embeddings;
  for (const LstmStack& s : lstm_) x = ad::lstm_layer(x, s.fwd, &s.bwd);
  ad::Var pooled = ad::max(x, 0);
  if (cfg.use_hc && cfg.hc_dim > 0) {
    if (hc.size() != cfg.hc_dim) {
      throw ShapeError("encode_dialogue: HC dim " + std::to_string(hc.size()) + " != " +
                       std::to_string(cfg.hc_dim));
    }
    pooled = ad::concat({pooled, tape_->constant(Tensor::vector(hc))}, 0);
  }
  ad::Var h = ad::relu(ad::add(ad::matmul(pooled, fc1_.w), fc1_.b));
  h = ad::relu(ad::add(ad::matmul(h, fc2_.w), fc2_.b));
  DialogueOutput out;
  out.logits = ad::add(ad::matmul(h, head_cls_.w), head_cls_.b);
  out.mmse01 = ad::sigmoid(ad::add(ad::matmul(h, head_reg_.w), head_reg_.b));
  return out;
}

DialogueOutput ModelGraph::forward(const Dialogue& d, std::size_t begin, std::size_t count, bool train,
                                   Rng* dropout_rng) {
  if (count == 0 || begin + count > d.length()) {
    throw ShapeError("forward: utterance window [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") outside dialogue of length " +
                     std::to_string(d.length()));
  }
  const std::size_t E = model_->trace().embedding_dim();
  std::vector<ad::Var> embeddings;
  embeddings.reserve(count);
  for (std::size_t t = begin; t < begin + count; ++t) {
    auto streams = project_inputs(d.utterances[t], train, dropout_rng);
    embeddings.push_back(ad::reshape(encode_utterance(streams), {1, E}));
  }
  return encode_dialogue(ad::concat(std::span<const ad::Var>(embeddings), 0), d.hc);
}

// ---- persistence ------------------------------------------------------------

std::string ModelSidecar::to_json() const {
  json j;
  j["format"] = "adcrnn-model-v1";
  j["model"] = json::parse(config.to_json());
  j["use_pos"] = pipeline.use_pos;
  if (pipeline.hc_mask) j["hc_mask"] = *pipeline.hc_mask;
  if (pipeline.norm_stats) j["norm_stats"] = detail::dataset_stats_to_json(*pipeline.norm_stats);
  return j.dump(2);
}

ModelSidecar ModelSidecar::from_json(const std::string& text) {
  ModelSidecar s;
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string{}) != "adcrnn-model-v1") throw DataError("unknown model sidecar format");
    s.config = ModelConfig::from_json(j.at("model").dump());
    s.pipeline.use_pos = j.value("use_pos", false);
    if (j.contains("hc_mask")) s.pipeline.hc_mask = j.at("hc_mask").get<std::vector<std::size_t>>();
    if (j.contains("norm_stats")) s.pipeline.norm_stats = detail::dataset_stats_from_json(j.at("norm_stats"));
  } catch (const json::exception& e) {
    throw DataError(std::string("model sidecar: ") + e.what());
  }
  return s;
}

std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint) {
  auto p = checkpoint;
  p.replace_extension(".json");
  return p;
}

void save_model(const std::filesystem::path& checkpoint, const CrnnModel& model, const ModelSidecar& sidecar) {
  save_checkpoint(checkpoint, model.params());
  std::ofstream f(sidecar_path(checkpoint), std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + sidecar_path(checkpoint).string());
  f << sidecar.to_json() << '\n';
}

LoadedModel load_model(const std::filesystem::path& checkpoint) {
  const auto side = sidecar_path(checkpoint);
  std::ifstream f(side, std::ios::binary);
  if (!f) throw DataError("missing model sidecar: " + side.string());
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  ModelSidecar sidecar = ModelSidecar::from_json(text);
  try {
    sidecar.config.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(side.string() + ": " + e.what());
  }
  CrnnModel model(sidecar.config);
  model.params().restore(load_checkpoint(checkpoint));
  return {std::move(model), std::move(sidecar)};
}

}  // namespace adcrnn
