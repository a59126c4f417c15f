// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <iostream>

#include <CLI11.hpp>

#include "adcrnn/checkpoint.hpp"
#include "adcrnn/error.hpp"
#include "adcrnn/training.hpp"
#include "common.hpp"

namespace adcrnn::cli {
namespace {

struct TrainOpts {
  std::string manifest, config, out_dir, modality, hc_mask_file;
  std::optional<std::size_t> folds, epochs, batch_size, threads;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr, hc_select_alpha;
  bool use_pos = false, hc_select_once = false, no_cv = false;
  std::optional<bool> use_hc;
};

json epochs_json(const std::vector<EpochLog>& log) {
  json arr = json::array();
  for (const auto& e : log) {
    arr.push_back({{"epoch", e.epoch},
                   {"train_loss", number_or_null(e.train_loss)},
                   {"val_loss", number_or_null(e.val_loss)},
                   {"val_accuracy", number_or_null(e.val_accuracy)},
                   {"val_rmse", number_or_null(e.val_rmse)}});
  }
  return arr;
}

std::vector<std::size_t> read_hc_mask(const std::string& path) {
  try {
    const auto j = json::parse(read_text_file(path));
    return j.at("kept_indices").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw DataError("HC mask " + path + ": " + e.what());
  }
}

json options_json(const CvOptions& o) {
  json j{{"use_pos", o.use_pos}, {"hc_select_once", o.hc_select_once}, {"threads", o.threads}};
  j["hc_select_alpha"] = o.hc_select_alpha ? json(*o.hc_select_alpha) : json(nullptr);
  j["hc_mask"] = o.hc_mask ? json(*o.hc_mask) : json(nullptr);
  return j;
}

void apply_options_json(const json& j, CvOptions& o) {
  o.use_pos = j.value("use_pos", o.use_pos);
  o.hc_select_once = j.value("hc_select_once", o.hc_select_once);
  o.threads = j.value("threads", o.threads);
  if (j.contains("hc_select_alpha") && !j["hc_select_alpha"].is_null()) o.hc_select_alpha = j["hc_select_alpha"].get<double>();
  if (j.contains("hc_mask") && !j["hc_mask"].is_null()) o.hc_mask = j["hc_mask"].get<std::vector<std::size_t>>();
}

struct Row {
  std::string label;
  std::size_t n = 0;
  std::string best_epoch;
  ClassificationMetrics c;
  RegressionMetrics r;
  double baseline = 0.0;
};

std::string cv_csv(const std::vector<Row>& rows) {
  std::string out =
      "fold,n_val,best_epoch,accuracy,macro_f1,non_ad_precision,non_ad_recall,non_ad_f1,ad_precision,ad_recall,"
      "ad_f1,rmse,baseline_rmse,r2,r2_pearson\n";
  for (const auto& w : rows) {
    out += w.label + "," + std::to_string(w.n) + "," + w.best_epoch + "," + fmt(w.c.accuracy) + "," +
           fmt(w.c.macro_f1) + "," + fmt(w.c.non_ad.precision) + "," + fmt(w.c.non_ad.recall) + "," +
           fmt(w.c.non_ad.f1) + "," + fmt(w.c.ad.precision) + "," + fmt(w.c.ad.recall) + "," + fmt(w.c.ad.f1) +
           "," + fmt(w.r.rmse) + "," + fmt(w.baseline) + "," + fmt(w.r.r2) + "," + fmt(w.r.r2_pearson) + "\n";
  }
  return out;
}

json row_json(const Row& w) {
  return json{{"n_val", w.n},
              {"classification", classification_json(w.c)},
              {"regression", regression_json(w.r)},
              {"baseline_rmse", number_or_null(w.baseline)}};
}

// Unweighted mean over folds of every reported number.
Row mean_row(const std::vector<Row>& folds) {
  Row m;
  m.label = "mean";
  const double k = static_cast<double>(folds.size());
  auto avg = [&](auto get) {
    double s = 0.0;
    for (const auto& f : folds) s += get(f);
    return s / k;
  };
  for (const auto& f : folds) m.n += f.n;
  m.c.accuracy = avg([](const Row& f) { return f.c.accuracy; });
  m.c.macro_f1 = avg([](const Row& f) { return f.c.macro_f1; });
  m.c.non_ad.precision = avg([](const Row& f) { return f.c.non_ad.precision; });
  m.c.non_ad.recall = avg([](const Row& f) { return f.c.non_ad.recall; });
  m.c.non_ad.f1 = avg([](const Row& f) { return f.c.non_ad.f1; });
  m.c.ad.precision = avg([](const Row& f) { return f.c.ad.precision; });
  m.c.ad.recall = avg([](const Row& f) { return f.c.ad.recall; });
  m.c.ad.f1 = avg([](const Row& f) { return f.c.ad.f1; });
  m.r.rmse = avg([](const Row& f) { return f.r.rmse; });
  m.r.r2 = avg([](const Row& f) { return f.r.r2; });
  m.r.r2_pearson = avg([](const Row& f) { return f.r.r2_pearson; });
  m.baseline = avg([](const Row& f) { return f.baseline; });
  return m;
}

}  // namespace

Runner add_train(CLI::App& app, const Invocation& inv) {
  auto o = std::make_shared<TrainOpts>();
  app.add_option("--manifest", o->manifest, "Dataset manifest")->required();
  app.add_option("--config", o->config, "JSON with optional \"model\", \"train\" and \"options\" sections (run.json works)");
  app.add_option("--folds", o->folds, "Number of CV folds (default: manifest folds, else 5)");
  app.add_option("--seed", o->seed, "Master seed");
  app.add_option("--modality", o->modality, "Input streams")->check(CLI::IsMember({"acoustic", "textual", "both"}));
  app.add_flag("--use-pos", o->use_pos, "Append POS histograms to the textual stream");
  app.add_flag("--use-hc,!--no-hc", o->use_hc, "Fuse hand-crafted features (on by default)");
  app.add_option("--out-dir", o->out_dir, "Output directory")->required();
  app.add_option("--epochs", o->epochs);
  app.add_option("--lr", o->lr);
  app.add_option("--batch-size", o->batch_size);
  app.add_option("--threads", o->threads, "Folds trained in parallel");
  app.add_option("--hc-select-alpha", o->hc_select_alpha, "ANOVA-screen HC columns at this alpha");
  app.add_flag("--hc-select-once", o->hc_select_once, "Fit the HC screen once on all dialogues instead of per fold");
  app.add_option("--hc-mask", o->hc_mask_file, "selection.json from select-features (fixed HC columns)");
  app.add_flag("--no-cv", o->no_cv, "Train a single model on every dialogue");

  return [o, &inv]() -> int {
    ModelConfig model_cfg;
    TrainConfig train_cfg;
    CvOptions cv;
    if (!o->config.empty()) {
      json j;
      try {
        j = json::parse(read_text_file(o->config));
      } catch (const json::exception& e) {
        throw DataError("config " + o->config + ": " + e.what());
      }
      if (j.contains("model")) model_cfg = ModelConfig::from_json(j["model"].dump());
      if (j.contains("train")) train_cfg = TrainConfig::from_json(j["train"].dump());
      if (j.contains("options")) apply_options_json(j["options"], cv);
    }
    if (o->seed) train_cfg.seed = *o->seed;
    if (o->epochs) train_cfg.epochs = *o->epochs;
    if (o->lr) train_cfg.lr = *o->lr;
    if (o->batch_size) train_cfg.batch_size = *o->batch_size;
    if (o->folds) train_cfg.folds = *o->folds;
    if (o->modality == "acoustic") model_cfg.use_acoustic = true, model_cfg.use_textual = false;
    if (o->modality == "textual") model_cfg.use_acoustic = false, model_cfg.use_textual = true;
    if (o->modality == "both") model_cfg.use_acoustic = model_cfg.use_textual = true;
    if (o->use_hc) model_cfg.use_hc = *o->use_hc;
    if (o->use_pos) cv.use_pos = true;
    if (o->threads) cv.threads = *o->threads;
    if (o->hc_select_alpha) cv.hc_select_alpha = *o->hc_select_alpha;
    if (o->hc_select_once) cv.hc_select_once = true;
    if (!o->hc_mask_file.empty()) cv.hc_mask = read_hc_mask(o->hc_mask_file);
    if (cv.hc_select_alpha && !(*cv.hc_select_alpha > 0.0 && *cv.hc_select_alpha <= 1.0)) {
      throw UsageError("--hc-select-alpha must lie in (0, 1]");
    }
    if (cv.threads == 0) throw UsageError("--threads must be positive");
    train_cfg.validate();

    const std::filesystem::path out(o->out_dir);
    ensure_dir(out);
    const DatasetManifest manifest = load_manifest(o->manifest);
    const std::vector<Dialogue> data = load_dataset(manifest);
    if (manifest.norm_stats) {
      std::cerr << "note: manifest norm_stats ignored; statistics are fit on each training split\n";
    }

    json resolved{{"manifest", o->manifest},
                  {"model", json::parse(model_cfg.to_json())},
                  {"train", json::parse(train_cfg.to_json())},
                  {"options", options_json(cv)},
                  {"no_cv", o->no_cv}};

    if (o->no_cv) {
      write_run_json(out, inv, "train", resolved);
      ModelSidecar side = fit_pipeline(data, data, model_cfg, cv);
      TrainResult r = train(side.pipeline.apply(data), {}, side.config, train_cfg, 0);
      save_model(out / "model.ckpt", r.model, side);
      write_text_file(out / "epochs.json", epochs_json(r.log).dump(2) + "\n");
      if (r.diverged) {
        std::cerr << "divergence: " << r.divergence_message << "\n";
        return kDivergence;
      }
      std::cout << "trained on " << data.size() << " dialogues; final loss " << fmt(r.log.back().train_loss) << "\n";
      return kOk;
    }

    std::vector<FoldSplit> splits;
    json assignment = json::object();
    if (manifest.folds && !o->folds) {
      std::vector<int> fold_of;
      for (const auto& id : manifest.ids) fold_of.push_back(manifest.folds->at(id));
      splits = splits_from_assignment(fold_of);
    } else {
      std::vector<int> labels;
      for (const auto& d : data) labels.push_back(d.label_ad.value_or(false) ? 1 : 0);
      splits = kfold_split(data.size(), train_cfg.folds, train_cfg.seed, labels);
    }
    for (std::size_t f = 0; f < splits.size(); ++f)
      for (std::size_t i : splits[f].val) assignment[data[i].id] = f;
    resolved["fold_assignment"] = assignment;
    write_run_json(out, inv, "train", resolved);

    const auto results = cross_validate(data, splits, model_cfg, train_cfg, cv);

    std::vector<Row> rows;
    std::vector<PredictionRow> pooled_rows;
    std::vector<bool> pooled_pred, pooled_truth;
    std::vector<double> pooled_mmse, pooled_true_mmse;
    double pooled_base_sq = 0.0;
    bool diverged = false;
    json folds_json = json::array();
    for (const auto& fr : results) {
      const auto dir = out / ("fold" + std::to_string(fr.fold));
      ensure_dir(dir);
      save_model(dir / "model.ckpt", fr.result.model, fr.sidecar);
      write_text_file(dir / "epochs.json", epochs_json(fr.result.log).dump(2) + "\n");
      std::vector<PredictionRow> pr;
      for (std::size_t i = 0; i < fr.val_ids.size(); ++i) {
        PredictionRow row{fr.val_ids[i],     fr.val_predictions[i].p_ad, fr.val_predictions[i].p_ad >= 0.5,
                          fr.val_predictions[i].mmse, 1, fr.val_predictions[i].p_ad >= 0.5 ? 1u : 0u,
                          fr.val_truth_ad[i], static_cast<int>(fr.val_truth_mmse[i])};
        pr.push_back(row);
        pooled_pred.push_back(row.pred_ad);
        pooled_truth.push_back(fr.val_truth_ad[i]);
        pooled_mmse.push_back(row.pred_mmse);
        pooled_true_mmse.push_back(fr.val_truth_mmse[i]);
      }
      pooled_base_sq += fr.baseline_rmse * fr.baseline_rmse * static_cast<double>(fr.val_ids.size());
      write_text_file(dir / "val_predictions.csv", predictions_csv(pr));
      pooled_rows.insert(pooled_rows.end(), pr.begin(), pr.end());

      Row w{std::to_string(fr.fold), fr.val_ids.size(), std::to_string(fr.result.best_epoch), fr.classification,
            fr.regression, fr.baseline_rmse};
      json fj = row_json(w);
      fj["fold"] = fr.fold;
      fj["best_epoch"] = fr.result.best_epoch;
      fj["diverged"] = fr.result.diverged;
      if (fr.result.diverged) fj["divergence_message"] = fr.result.divergence_message;
      folds_json.push_back(fj);
      rows.push_back(w);
      diverged = diverged || fr.result.diverged;
      std::cerr << "fold " << fr.fold << ": best epoch " << fr.result.best_epoch << ", val accuracy "
                << fmt(fr.classification.accuracy) << ", val rmse " << fmt(fr.regression.rmse) << " (baseline "
                << fmt(fr.baseline_rmse) << ")" << (fr.result.diverged ? " [diverged]" : "") << "\n";
    }
    Row mean = mean_row(rows);
    Row pooled{"pooled", pooled_pred.size(), "", classification_metrics(pooled_pred, pooled_truth),
               regression_metrics(pooled_mmse, pooled_true_mmse),
               std::sqrt(pooled_base_sq / static_cast<double>(pooled_pred.size()))};
    std::vector<Row> table = rows;
    table.push_back(mean);
    table.push_back(pooled);
    write_text_file(out / "cv_metrics.csv", cv_csv(table));
    write_text_file(out / "val_predictions.csv", predictions_csv(pooled_rows));
    const json report{{"folds", folds_json},
                      {"mean", row_json(mean)},
                      {"pooled", row_json(pooled)},
                      {"diverged", diverged}};
    write_text_file(out / "cv_metrics.json", report.dump(2) + "\n");
    std::cout << "mean val accuracy " << fmt(mean.c.accuracy) << ", mean val rmse " << fmt(mean.r.rmse)
              << " (baseline " << fmt(mean.baseline) << ")\n";
    return diverged ? kDivergence : kOk;
  };
}

}  // namespace adcrnn::cli
