// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adcrnn/datamodel.hpp"
#include "adcrnn/layers.hpp"
#include "adcrnn/params.hpp"
#include "adcrnn/rng.hpp"

namespace adcrnn {

/// Hyperparameters of the dialogue CRNN. Defaults are the full-size model;
/// every tensor shape follows from these fields alone.
struct ModelConfig {
  std::size_t d_model = 1024;
  std::size_t kernel = 15;
  std::size_t n_se_blocks = 6;
  std::vector<std::size_t> channel_schedule{32, 128, 512, 1024};
  std::size_t stride_every = 2;  // every N-th block downsamples
  std::size_t stride = 4;
  std::size_t se_reduction = 16;
  std::size_t lstm_layers = 3;
  std::size_t lstm_hidden = 512;
  std::size_t fc_reduction = 4;
  double dropout = 0.2;

  bool use_acoustic = true;
  bool use_textual = true;
  bool use_hc = true;
  bool use_pos = false;
  bool use_attention = true;

  // Model input widths (textual includes POS when use_pos is set).
  std::size_t acoustic_dim = 128;
  std::size_t textual_dim = 1024;
  std::size_t hc_dim = 23;

  std::size_t padding() const { return (kernel - 1) / 2; }
  std::size_t n_modalities() const { return (use_acoustic ? 1 : 0) + (use_textual ? 1 : 0); }
  std::size_t cnn_input_channels() const { return n_modalities() + 1; }

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Channels and length after each CNN stage, plus the FC trunk widths.
struct ArchitectureTrace {
  struct Stage {
    std::string name;
    std::size_t channels;
    std::size_t length;
  };
  std::vector<Stage> stages;       // input, stem, block1..blockN
  std::vector<std::size_t> trunk;  // lstm-pool+hc, fc1, fc2

  /// Stage values with consecutive duplicates removed.
  std::vector<std::size_t> length_transitions() const;
  std::vector<std::size_t> channel_transitions() const;
  std::size_t embedding_dim() const { return stages.back().channels; }
};

ArchitectureTrace trace_architecture(const ModelConfig& cfg);

struct DialogueOutput {
  ad::Var logits;  // 2: [non-AD, AD]
  ad::Var mmse01;  // 1: sigmoid output, MMSE / 30
};

struct Prediction {
  double p_ad = 0.5;
  double mmse = 15.0;
};

class ModelGraph;

/// Parameters and configuration of the CRNN. Inference through predict()
/// is const and may run concurrently; training mutates params().
class CrnnModel {
 public:
  /// Registers every parameter (zero-valued) and checks the architecture.
  explicit CrnnModel(ModelConfig cfg);

  /// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases, drawn
  /// in parameter-name order.
  void init_params(Rng& rng);

  const ModelConfig& config() const { return cfg_; }
  const ArchitectureTrace& trace() const { return trace_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  /// Eval-mode forward over every utterance of `d`.
  Prediction predict(const Dialogue& d) const;

  /// Throws DataError if `d` does not carry the widths the config expects.
  void check_inputs(const Dialogue& d) const;

 private:
  friend class ModelGraph;

  struct FanIn {
    std::string name;
    std::size_t fan_in;  // 0 marks a bias (zero-initialized)
  };

  void add_param(const std::string& name, Shape shape, std::size_t fan_in);

  ModelConfig cfg_;
  ArchitectureTrace trace_;
  ParamStore params_;
  std::vector<FanIn> init_plan_;
};

/// The model's parameters bound to one tape. Trainable bindings accumulate
/// gradients into the model's ParamStore on backward.
class ModelGraph {
 public:
  ModelGraph(const CrnnModel& model, ad::Tape& tape);
  ModelGraph(CrnnModel& model, ad::Tape& tape, bool trainable);

  /// Input dropout (train only) on the raw features, then each enabled
  /// modality projected to d_model. The speaker embedding row comes last.
  std::vector<ad::Var> project_inputs(const Utterance& u, bool train, Rng* dropout_rng);

  /// Per-modality attention, channel stacking, conv stem, SE blocks and
  /// global max pooling: streams (modalities..., speaker) -> embedding.
  ad::Var encode_utterance(std::span<const ad::Var> streams);

  /// Bi-LSTM over T×E embeddings, max over time, HC fusion, FC trunk, heads.
  DialogueOutput encode_dialogue(ad::Var utterance_embeddings, const std::vector<double>& hc);

  /// Utterances [begin, begin + count) of `d` through the full network.
  DialogueOutput forward(const Dialogue& d, std::size_t begin, std::size_t count, bool train,
                         Rng* dropout_rng);
  DialogueOutput forward(const Dialogue& d, bool train, Rng* dropout_rng) {
    return forward(d, 0, d.length(), train, dropout_rng);
  }

 private:
  struct Dense {
    ad::Var w, b;
  };
  struct Block {
    ad::Var conv1_w, conv1_b;
    ad::SeWeights se;
    ad::Var conv2_w, conv2_b;
    std::size_t stride;
  };
  struct LstmStack {
    ad::LstmWeights fwd, bwd;
  };

  void bind(const CrnnModel& model, ad::Tape& tape, bool trainable, CrnnModel* mutable_model);
  ad::Var param(const std::string& name);

  const CrnnModel* model_;
  CrnnModel* mutable_model_;
  ad::Tape* tape_;
  bool trainable_;

  std::optional<Dense> proj_acoustic_, proj_textual_;
  ad::Var speaker_;
  Dense stem_;
  std::vector<Block> blocks_;
  std::vector<LstmStack> lstm_;
  Dense fc1_, fc2_, head_cls_, head_reg_;
};

/// Softmax of two logits; returns P(AD).
double ad_probability(const Tensor& logits);

/// Everything needed besides the weights to run a saved model.
struct ModelSidecar {
  ModelConfig config;
  InputPipeline pipeline;

  std::string to_json() const;
  static ModelSidecar from_json(const std::string& text);
};

/// Sidecar path for a checkpoint: same stem with ".json".
std::filesystem::path sidecar_path(const std::filesystem::path& checkpoint);

void save_model(const std::filesystem::path& checkpoint, const CrnnModel& model,
                const ModelSidecar& sidecar);

struct LoadedModel {
  CrnnModel model;
  ModelSidecar sidecar;
};
LoadedModel load_model(const std::filesystem::path& checkpoint);

}  // namespace adcrnn
