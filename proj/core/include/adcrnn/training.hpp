// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adcrnn/datamodel.hpp"
#include "adcrnn/evaluation.hpp"
#include "adcrnn/network.hpp"
#include "adcrnn/params.hpp"
#include "adcrnn/rng.hpp"

namespace adcrnn {

struct TrainConfig {
  double lr = 0.0002;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double epsilon = 1e-8;
  std::size_t batch_size = 4;
  std::size_t epochs = 300;
  std::size_t min_window = 5;
  std::uint64_t seed = 0;
  std::size_t folds = 5;

  void validate() const;
  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// ---- optimizer --------------------------------------------------------------

struct AdamState {
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
  std::uint64_t step = 0;
};

/// Bias-corrected Adam update from the gradients stored in `params`.
/// Throws DivergenceError naming the first tensor with a non-finite gradient;
/// in that case no parameter is modified.
void adam_step(ParamStore& params, AdamState& state, const TrainConfig& cfg);

// ---- batching ---------------------------------------------------------------

struct Window {
  std::size_t begin = 0;
  std::size_t count = 0;
};

/// Window length U, uniform over [min(min_window, m), m] with m the shortest
/// dialogue in the batch.
std::size_t sample_window(std::span<const std::size_t> lengths, Rng& rng, std::size_t min_window = 5);

/// One contiguous window of a shared length per dialogue, each at a uniform
/// random start offset.
std::vector<Window> sample_windows(std::span<const std::size_t> lengths, Rng& rng, std::size_t min_window = 5);

// ---- loss -------------------------------------------------------------------

inline constexpr double kLogClamp = 1e-12;

/// Cross-entropy of softmax(logits) against the AD label plus the squared
/// error of the scaled MMSE; the two terms are summed unweighted.
ad::Var joint_loss(ad::Var logits, bool label_ad, ad::Var mmse01_pred, double mmse01_true);

/// Same quantity from already-evaluated outputs.
double joint_loss_value(double p_ad, bool label_ad, double mmse01_pred, double mmse01_true);

// ---- cross-validation split -------------------------------------------------

struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
};

/// Validation folds of ceil(n / folds) items with the remainder in the last
/// fold (balanced sizes when that would leave the last fold empty). With
/// labels, items are interleaved per class first so every fold is stratified.
std::vector<FoldSplit> kfold_split(std::size_t n, std::size_t folds, std::uint64_t seed,
                                   std::span<const int> labels = {});

/// Splits from explicit fold assignments (fold index per item).
std::vector<FoldSplit> splits_from_assignment(std::span<const int> fold_of);

// ---- training loop ----------------------------------------------------------

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;      // NaN without a validation split
  double val_accuracy = 0.0;  // NaN without a validation split
  double val_rmse = 0.0;      // NaN without a validation split

  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

struct TrainResult {
  CrnnModel model;  // parameters of the selected epoch
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;  // 0 when no epoch completed
  bool diverged = false;
  std::string divergence_message;
};

/// Mini-batch training with windowed batches, the joint loss and Adam.
/// Keeps the epoch with the lowest validation loss (the last epoch when
/// `val` is empty). Random streams (init, batching, dropout) derive from
/// cfg.seed and `stream_index`. A non-finite loss or gradient stops training
/// and returns the best parameters so far with `diverged` set.
TrainResult train(const std::vector<Dialogue>& train_set, const std::vector<Dialogue>& val_set,
                  const ModelConfig& model_cfg, const TrainConfig& cfg, std::uint64_t stream_index = 0,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

// ---- cross-validation -------------------------------------------------------

struct CvOptions {
  bool use_pos = false;
  std::optional<double> hc_select_alpha;  // ANOVA screening of HC columns
  bool hc_select_once = false;            // fit on all dialogues instead of per training split
  std::optional<std::vector<std::size_t>> hc_mask;  // fixed mask (overrides selection)
  std::size_t threads = 1;
};

struct FoldResult {
  std::size_t fold = 0;
  TrainResult result;
  ModelSidecar sidecar;
  std::vector<std::string> val_ids;
  std::vector<Prediction> val_predictions;
  std::vector<bool> val_truth_ad;
  std::vector<double> val_truth_mmse;
  ClassificationMetrics classification;
  RegressionMetrics regression;
  double baseline_rmse = 0.0;  // training-split mean MMSE predicted for every val item
};

/// Derives per-fold input pipelines (normalization on the training split,
/// optional HC selection), fills model input widths from the data and
/// trains every fold, in parallel when options.threads > 1.
std::vector<FoldResult> cross_validate(const std::vector<Dialogue>& dialogues,
                                       const std::vector<FoldSplit>& splits, const ModelConfig& model_cfg,
                                       const TrainConfig& cfg, const CvOptions& options);

/// Input pipeline and model widths for a training split.
ModelSidecar fit_pipeline(const std::vector<Dialogue>& train_raw, const std::vector<Dialogue>& all_raw,
                          const ModelConfig& model_cfg, const CvOptions& options);

}  // namespace adcrnn
