// SPDX-License-Identifier: Apache-2.0
#include "adcrnn/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "adcrnn/anova.hpp"
#include "adcrnn/error.hpp"

namespace adcrnn {

using nlohmann::json;

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("train config: lr must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("train config: betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("train config: epsilon must be positive");
  if (batch_size == 0) throw std::invalid_argument("train config: batch_size must be positive");
  if (min_window == 0) throw std::invalid_argument("train config: min_window must be >= 1");
  if (folds < 2) throw std::invalid_argument("train config: folds must be >= 2");
}

std::string TrainConfig::to_json() const {
  return json{{"lr", lr},
              {"beta1", beta1},
              {"beta2", beta2},
              {"epsilon", epsilon},
              {"batch_size", batch_size},
              {"epochs", epochs},
              {"min_window", min_window},
              {"seed", seed},
              {"folds", folds}}
      .dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  TrainConfig c;
  try {
    const json j = json::parse(text);
    c.lr = j.value("lr", c.lr);
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epsilon = j.value("epsilon", c.epsilon);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.min_window = j.value("min_window", c.min_window);
    c.seed = j.value("seed", c.seed);
    c.folds = j.value("folds", c.folds);
  } catch (const json::exception& e) {
    throw DataError(std::string("train config: ") + e.what());
  }
  return c;
}

// ---- optimizer --------------------------------------------------------------

void adam_step(ParamStore& params, AdamState& state, const TrainConfig& cfg) {
  for (const auto& [name, p] : params) {
    if (!p.grad.all_finite()) throw DivergenceError("non-finite gradient in parameter '" + name + "'");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& [name, p] : params) {
    if (p.grad.size() != p.value.size()) continue;  // never touched by a tape
    auto [mit, m_new] = state.m.try_emplace(name, p.value.shape());
    auto [vit, v_new] = state.v.try_emplace(name, p.value.shape());
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p.value[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

// ---- batching ---------------------------------------------------------------

std::size_t sample_window(std::span<const std::size_t> lengths, Rng& rng, std::size_t min_window) {
  if (lengths.empty()) throw std::invalid_argument("sample_window: empty batch");
  const std::size_t m = *std::min_element(lengths.begin(), lengths.end());
  if (m == 0) throw std::invalid_argument("sample_window: dialogue without utterances");
  const std::size_t lo = std::min(min_window, m);
  return static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(lo), static_cast<std::int64_t>(m)));
}

std::vector<Window> sample_windows(std::span<const std::size_t> lengths, Rng& rng, std::size_t min_window) {
  const std::size_t u = sample_window(lengths, rng, min_window);
  std::vector<Window> out;
  out.reserve(lengths.size());
  for (std::size_t len : lengths) {
    const auto begin = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(len - u)));
    out.push_back({begin, u});
  }
  return out;
}

// ---- loss -------------------------------------------------------------------

ad::Var joint_loss(ad::Var logits, bool label_ad, ad::Var mmse01_pred, double mmse01_true) {
  const std::size_t cls = label_ad ? 1 : 0;
  ad::Var p_true = ad::slice(ad::softmax(logits, 0), 0, cls, cls + 1);
  ad::Var ce = ad::scale(ad::log_clamped(p_true, kLogClamp), -1.0);
  ad::Var diff = ad::add(mmse01_pred, logits.tape->constant(Tensor::vector({-mmse01_true})));
  return ad::add(ce, ad::square(diff));
}

double joint_loss_value(double p_ad, bool label_ad, double mmse01_pred, double mmse01_true) {
  const double p_true = label_ad ? p_ad : 1.0 - p_ad;
  const double d = mmse01_pred - mmse01_true;
  return -std::log(std::max(p_true, kLogClamp)) + d * d;
}

// ---- split ------------------------------------------------------------------

std::vector<FoldSplit> kfold_split(std::size_t n, std::size_t folds, std::uint64_t seed,
                                   std::span<const int> labels) {
  if (folds < 2) throw std::invalid_argument("kfold_split: need at least 2 folds");
  if (n < folds) {
    throw DataError("kfold_split: " + std::to_string(n) + " items cannot fill " + std::to_string(folds) +
                    " folds");
  }
  if (!labels.empty() && labels.size() != n) throw std::invalid_argument("kfold_split: labels length != n");
  Rng rng = make_rng(seed, "kfold");
  auto shuffle = [&](std::vector<std::size_t>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i - 1)));
      std::swap(v[i - 1], v[j]);
    }
  };

  std::vector<std::size_t> order;
  if (labels.empty()) {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    shuffle(order);
  } else {
    // Place each class's (shuffled) members at evenly spaced quantiles, then
    // merge: contiguous chunks of the merged order are stratified.
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(i);
    std::vector<std::pair<double, std::size_t>> keyed;
    for (auto& [label, members] : by_class) {
      shuffle(members);
      for (std::size_t k = 0; k < members.size(); ++k) {
        keyed.emplace_back((static_cast<double>(k) + 0.5) / static_cast<double>(members.size()), members[k]);
      }
    }
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [key, idx] : keyed) order.push_back(idx);
  }

  std::vector<std::size_t> sizes(folds);
  const std::size_t big = (n + folds - 1) / folds;
  if ((folds - 1) * big < n) {
    std::fill(sizes.begin(), sizes.end() - 1, big);
    sizes.back() = n - (folds - 1) * big;
  } else {
    for (std::size_t f = 0; f < folds; ++f) sizes[f] = n / folds + (f < n % folds ? 1 : 0);
  }

  std::vector<FoldSplit> out(folds);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<bool> in_val(n, false);
    for (std::size_t k = 0; k < sizes[f]; ++k) in_val[order[pos + k]] = true;
    pos += sizes[f];
    for (std::size_t i = 0; i < n; ++i) (in_val[i] ? out[f].val : out[f].train).push_back(i);
  }
  return out;
}

std::vector<FoldSplit> splits_from_assignment(std::span<const int> fold_of) {
  if (fold_of.empty()) throw DataError("empty fold assignment");
  const int max_fold = *std::max_element(fold_of.begin(), fold_of.end());
  if (*std::min_element(fold_of.begin(), fold_of.end()) < 0) throw DataError("negative fold index");
  std::vector<FoldSplit> out(static_cast<std::size_t>(max_fold) + 1);
  for (std::size_t f = 0; f < out.size(); ++f) {
    for (std::size_t i = 0; i < fold_of.size(); ++i) {
      (fold_of[i] == static_cast<int>(f) ? out[f].val : out[f].train).push_back(i);
    }
    if (out[f].val.empty()) throw DataError("fold " + std::to_string(f) + " has no dialogues");
  }
  return out;
}

// ---- training loop ----------------------------------------------------------

namespace {

void require_labels(const std::vector<Dialogue>& ds, const char* which) {
  for (const Dialogue& d : ds) {
    if (!d.label_ad || !d.label_mmse) {
      throw DataError(std::string(which) + " dialogue '" + d.id + "' lacks AD/MMSE labels");
    }
  }
}

double mmse01(const Dialogue& d) { return static_cast<double>(*d.label_mmse) / kMmseMax; }

struct ValStats {
  double loss = std::numeric_limits<double>::quiet_NaN();
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double rmse = std::numeric_limits<double>::quiet_NaN();
};

ValStats evaluate_split(const CrnnModel& model, const std::vector<Dialogue>& val) {
  ValStats s;
  if (val.empty()) return s;
  double loss = 0.0, sq = 0.0;
  std::size_t correct = 0;
  for (const Dialogue& d : val) {
    const Prediction p = model.predict(d);
    loss += joint_loss_value(p.p_ad, *d.label_ad, p.mmse / kMmseMax, mmse01(d));
    correct += (p.p_ad >= 0.5) == *d.label_ad ? 1 : 0;
    sq += (p.mmse - *d.label_mmse) * (p.mmse - *d.label_mmse);
  }
  const auto n = static_cast<double>(val.size());
  s.loss = loss / n;
  s.accuracy = static_cast<double>(correct) / n;
  s.rmse = std::sqrt(sq / n);
  return s;
}

}  // namespace

TrainResult train(const std::vector<Dialogue>& train_set, const std::vector<Dialogue>& val_set,
                  const ModelConfig& model_cfg, const TrainConfig& cfg, std::uint64_t stream_index,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw DataError("training split is empty");
  require_labels(train_set, "training");
  require_labels(val_set, "validation");

  CrnnModel model(model_cfg);
  for (const Dialogue& d : train_set) model.check_inputs(d);
  for (const Dialogue& d : val_set) model.check_inputs(d);
  Rng init_rng = make_rng(cfg.seed, "init", stream_index);
  Rng batch_rng = make_rng(cfg.seed, "batching", stream_index);
  Rng dropout_rng = make_rng(cfg.seed, "dropout", stream_index);
  model.init_params(init_rng);
  model.params().zero_grad();

  TrainResult res{model, {}, 0, false, {}};
  double best_val = std::numeric_limits<double>::infinity();
  AdamState adam;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(batch_rng, 0, static_cast<std::int64_t>(i - 1)));
      std::swap(order[i - 1], order[j]);
    }
    double loss_sum = 0.0;
    std::size_t n_batches = 0;
    try {
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
        const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
        std::vector<std::size_t> lengths;
        for (std::size_t k = start; k < stop; ++k) lengths.push_back(train_set[order[k]].length());
        const auto windows = sample_windows(lengths, batch_rng, cfg.min_window);

        ad::Tape tape;
        ModelGraph graph(model, tape, true);
        ad::Var total{};
        for (std::size_t k = start; k < stop; ++k) {
          const Dialogue& d = train_set[order[k]];
          const Window& w = windows[k - start];
          const DialogueOutput out = graph.forward(d, w.begin, w.count, true, &dropout_rng);
          ad::Var l = joint_loss(out.logits, *d.label_ad, out.mmse01, mmse01(d));
          total = k == start ? l : ad::add(total, l);
        }
        total = ad::scale(total, 1.0 / static_cast<double>(stop - start));
        const double value = total.value()[0];
        if (!std::isfinite(value)) {
          throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch));
        }
        tape.backward(total);
        adam_step(model.params(), adam, cfg);
        model.params().zero_grad();
        loss_sum += value;
        ++n_batches;
      }
    } catch (const DivergenceError& e) {
      res.diverged = true;
      res.divergence_message = e.what();
      if (res.best_epoch == 0) res.model = model;
      return res;
    }

    const ValStats vs = evaluate_split(model, val_set);
    EpochLog log{epoch, loss_sum / static_cast<double>(n_batches), vs.loss, vs.accuracy, vs.rmse};
    res.log.push_back(log);
    if (on_epoch) on_epoch(log);
    if (val_set.empty() || vs.loss < best_val) {
      if (!val_set.empty()) best_val = vs.loss;
      res.best_epoch = epoch;
      res.model.params().restore(model.params().snapshot());
    }
  }
  if (res.best_epoch == 0) res.model = model;
  return res;
}

// ---- cross-validation -------------------------------------------------------

ModelSidecar fit_pipeline(const std::vector<Dialogue>& train_raw, const std::vector<Dialogue>& all_raw,
                          const ModelConfig& model_cfg, const CvOptions& options) {
  if (train_raw.empty()) throw DataError("training split is empty");
  ModelSidecar side;
  side.pipeline.use_pos = options.use_pos;
  if (options.use_pos && !train_raw.front().utterances.front().pos) {
    throw DataError("POS features requested but the dataset has none");
  }
  if (options.hc_mask) {
    side.pipeline.hc_mask = options.hc_mask;
  } else if (options.hc_select_alpha) {
    const FeatureMatrix fm = hc_feature_matrix(options.hc_select_once ? all_raw : train_raw);
    side.pipeline.hc_mask = select_features(fm, *options.hc_select_alpha).kept_indices;
  }
  side.pipeline.norm_stats = compute_norm_stats(train_raw);

  const Dialogue probe = side.pipeline.apply({train_raw.front()}).front();
  side.config = model_cfg;
  side.config.use_pos = options.use_pos;
  side.config.acoustic_dim = probe.utterances.front().acoustic.size();
  side.config.textual_dim = probe.utterances.front().textual.size();
  side.config.hc_dim = probe.hc.size();
  try {
    side.config.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }
  return side;
}

std::vector<FoldResult> cross_validate(const std::vector<Dialogue>& dialogues,
                                       const std::vector<FoldSplit>& splits, const ModelConfig& model_cfg,
                                       const TrainConfig& cfg, const CvOptions& options) {
  require_labels(dialogues, "training");
  std::vector<std::optional<FoldResult>> slots(splits.size());
  std::vector<std::exception_ptr> errors(splits.size());

  auto run_fold = [&](std::size_t f) {
    const FoldSplit& split = splits[f];
    std::vector<Dialogue> train_raw, val_raw;
    for (std::size_t i : split.train) train_raw.push_back(dialogues.at(i));
    for (std::size_t i : split.val) val_raw.push_back(dialogues.at(i));

    ModelSidecar side = fit_pipeline(train_raw, dialogues, model_cfg, options);
    const auto train_p = side.pipeline.apply(train_raw);
    const auto val_p = side.pipeline.apply(val_raw);

    FoldResult fr{f, train(train_p, val_p, side.config, cfg, f), side, {}, {}, {}, {}, {}, {}, 0.0};
    double train_mean = 0.0;
    for (const Dialogue& d : train_raw) train_mean += *d.label_mmse;
    train_mean /= static_cast<double>(train_raw.size());

    std::vector<bool> pred_ad;
    std::vector<double> pred_mmse;
    double base_sq = 0.0;
    for (const Dialogue& d : val_p) {
      const Prediction p = fr.result.model.predict(d);
      fr.val_ids.push_back(d.id);
      fr.val_predictions.push_back(p);
      fr.val_truth_ad.push_back(*d.label_ad);
      fr.val_truth_mmse.push_back(*d.label_mmse);
      pred_ad.push_back(p.p_ad >= 0.5);
      pred_mmse.push_back(p.mmse);
      base_sq += (train_mean - *d.label_mmse) * (train_mean - *d.label_mmse);
    }
    if (!val_p.empty()) {
      fr.classification = classification_metrics(pred_ad, fr.val_truth_ad);
      fr.regression = regression_metrics(pred_mmse, fr.val_truth_mmse);
      fr.baseline_rmse = std::sqrt(base_sq / static_cast<double>(val_p.size()));
    }
    slots[f] = std::move(fr);
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, splits.size()));
  if (threads == 1) {
    for (std::size_t f = 0; f < splits.size(); ++f) run_fold(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t f = next++; f < splits.size(); f = next++) {
          try {
            run_fold(f);
          } catch (...) {
            errors[f] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::vector<FoldResult> out;
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace adcrnn
