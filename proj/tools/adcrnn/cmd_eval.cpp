// SPDX-License-Identifier: Apache-2.0
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "adcrnn/error.hpp"
#include "adcrnn/evaluation.hpp"
#include "adcrnn/network.hpp"
#include "common.hpp"

namespace adcrnn::cli {
namespace {

struct Member {
  double p_ad;
  double mmse;
};

PredictionRow combine(const std::string& id, const std::vector<Member>& members) {
  std::vector<MemberOutput> outs;
  double p = 0.0;
  std::size_t votes = 0;
  for (const auto& m : members) {
    outs.push_back({m.p_ad >= 0.5, m.mmse});
    p += m.p_ad;
    votes += m.p_ad >= 0.5 ? 1 : 0;
  }
  const MemberOutput e = ensemble(outs);
  PredictionRow r;
  r.id = id;
  r.p_ad = p / static_cast<double>(members.size());
  r.pred_ad = e.ad;
  r.pred_mmse = e.mmse;
  r.members = members.size();
  r.votes_ad = votes;
  return r;
}

std::vector<Dialogue> load_inputs(const std::string& manifest, const std::vector<std::string>& inputs) {
  if (!manifest.empty() && !inputs.empty()) throw UsageError("give either --manifest or --input, not both");
  if (!manifest.empty()) return load_dataset(load_manifest(manifest));
  if (inputs.empty()) throw UsageError("no dialogues: pass --manifest or --input");
  std::vector<Dialogue> out;
  for (const auto& p : inputs) out.push_back(load_dialogue(p));
  return out;
}

/// Runs every checkpoint over the dialogues; several checkpoints are ensembled.
std::vector<PredictionRow> run_checkpoints(const std::vector<std::string>& checkpoints,
                                           const std::vector<Dialogue>& dialogues) {
  std::vector<std::vector<Member>> per_dialogue(dialogues.size());
  for (const auto& ck : checkpoints) {
    const LoadedModel lm = load_model(ck);
    const auto prepared = lm.sidecar.pipeline.apply(dialogues);
    for (std::size_t i = 0; i < prepared.size(); ++i) {
      try {
        const Prediction p = lm.model.predict(prepared[i]);
        per_dialogue[i].push_back({p.p_ad, p.mmse});
      } catch (const DataError& e) {
        throw DataError("checkpoint " + ck + " vs dialogue '" + dialogues[i].id + "': " + e.what());
      }
    }
  }
  std::vector<PredictionRow> rows;
  for (std::size_t i = 0; i < dialogues.size(); ++i) {
    PredictionRow r = combine(dialogues[i].id, per_dialogue[i]);
    r.true_ad = dialogues[i].label_ad;
    r.true_mmse = dialogues[i].label_mmse;
    rows.push_back(std::move(r));
  }
  return rows;
}

void emit_csv(const std::string& out, const std::string& csv) {
  if (out.empty() || out == "-") {
    std::cout << csv;
  } else {
    const std::filesystem::path p(out);
    if (p.has_parent_path()) ensure_dir(p.parent_path());
    write_text_file(p, csv);
  }
}

}  // namespace

Runner add_predict(CLI::App& app, const Invocation&) {
  struct Opts {
    std::vector<std::string> checkpoints, inputs;
    std::string manifest, out;
  };
  auto o = std::make_shared<Opts>();
  app.add_option("--checkpoint", o->checkpoints, "Model checkpoint(s); several are ensembled")->required();
  app.add_option("--manifest", o->manifest, "Dataset manifest");
  app.add_option("--input", o->inputs, "Dialogue feature file(s)");
  app.add_option("--out", o->out, "Output CSV (default: stdout)");
  return [o] {
    const auto dialogues = load_inputs(o->manifest, o->inputs);
    emit_csv(o->out, predictions_csv(run_checkpoints(o->checkpoints, dialogues)));
    return kOk;
  };
}

Runner add_ensemble(CLI::App& app, const Invocation&) {
  struct Opts {
    std::vector<std::string> predictions;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  app.add_option("--predictions", o->predictions, "Prediction CSVs, one per model")->required();
  app.add_option("--out", o->out, "Output CSV (default: stdout)");
  return [o] {
    std::vector<std::string> order;
    std::map<std::string, std::vector<Member>> members;
    std::map<std::string, PredictionRow> truth;
    for (std::size_t f = 0; f < o->predictions.size(); ++f) {
      const auto rows = parse_predictions_csv(read_text_file(o->predictions[f]), o->predictions[f]);
      for (const auto& r : rows) {
        auto& m = members[r.id];
        if (f == 0) {
          order.push_back(r.id);
        } else if (m.size() != f) {
          throw DataError(o->predictions[f] + ": id '" + r.id + "' is missing from an earlier table");
        }
        if (m.size() > f) throw DataError(o->predictions[f] + ": duplicate id '" + r.id + "'");
        m.push_back({r.p_ad, r.pred_mmse});
        if (!truth.contains(r.id) || (!truth[r.id].true_ad && r.true_ad)) truth[r.id] = r;
      }
    }
    std::vector<PredictionRow> out;
    for (const auto& id : order) {
      if (members[id].size() != o->predictions.size()) throw DataError("id '" + id + "' is missing from some tables");
      PredictionRow r = combine(id, members[id]);
      r.true_ad = truth[id].true_ad;
      r.true_mmse = truth[id].true_mmse;
      out.push_back(std::move(r));
    }
    if (members.size() != order.size()) throw DataError("prediction tables list different dialogues");
    emit_csv(o->out, predictions_csv(out));
    return kOk;
  };
}

Runner add_evaluate(CLI::App& app, const Invocation& inv) {
  struct Opts {
    std::vector<std::string> checkpoints;
    std::string manifest, predictions, out_dir;
  };
  auto o = std::make_shared<Opts>();
  app.add_option("--predictions", o->predictions, "Prediction CSV with truth columns");
  app.add_option("--checkpoint", o->checkpoints, "Checkpoint(s) to run over --manifest");
  app.add_option("--manifest", o->manifest, "Labelled dataset manifest");
  app.add_option("--out-dir", o->out_dir, "Output directory")->required();
  return [o, &inv] {
    if (o->predictions.empty() == o->checkpoints.empty()) {
      throw UsageError("give either --predictions or --checkpoint (with --manifest)");
    }
    if (!o->checkpoints.empty() && o->manifest.empty()) throw UsageError("--checkpoint needs --manifest");
    const std::filesystem::path dir(o->out_dir);
    ensure_dir(dir);
    write_run_json(dir, inv, "evaluate",
                   json{{"predictions", o->predictions}, {"checkpoints", o->checkpoints}, {"manifest", o->manifest}});

    std::vector<PredictionRow> rows;
    if (!o->predictions.empty()) {
      rows = parse_predictions_csv(read_text_file(o->predictions), o->predictions);
    } else {
      rows = run_checkpoints(o->checkpoints, load_dataset(load_manifest(o->manifest)));
      write_text_file(dir / "predictions.csv", predictions_csv(rows));
    }
    std::vector<bool> pred, truth;
    std::vector<double> pm, tm;
    for (const auto& r : rows) {
      if (!r.true_ad || !r.true_mmse) throw DataError("dialogue '" + r.id + "' has no AD/MMSE truth");
      pred.push_back(r.pred_ad);
      truth.push_back(*r.true_ad);
      pm.push_back(r.pred_mmse);
      tm.push_back(*r.true_mmse);
    }
    const auto cls = classification_metrics(pred, truth);
    const auto reg = regression_metrics(pm, tm);
    SeverityReport sev;
    try {
      sev = severity_report(pm, tm);
    } catch (const std::out_of_range& e) {
      throw DataError(std::string("severity: ") + e.what());
    }

    std::string csv = "class,precision,recall,f1,support,accuracy,rmse\n";
    auto line = [&](const char* name, const ClassMetrics& c) {
      csv += std::string(name) + "," + fmt(c.precision) + "," + fmt(c.recall) + "," + fmt(c.f1) + "," +
             std::to_string(c.support) + "," + fmt(cls.accuracy) + "," + fmt(reg.rmse) + "\n";
    };
    line("non-AD", cls.non_ad);
    line("AD", cls.ad);
    write_text_file(dir / "metrics.csv", csv);
    const json report{{"n", rows.size()},
                      {"classification", classification_json(cls)},
                      {"regression", regression_json(reg)},
                      {"severity", {{"agreement", sev.agreement}, {"plot", "severity.svg"}}}};
    write_text_file(dir / "metrics.json", report.dump(2) + "\n");
    write_text_file(dir / "severity.svg", sev.svg);
    if (reg.warning) std::cerr << "warning: " << *reg.warning << "\n";
    std::cout << "accuracy " << fmt(cls.accuracy) << ", rmse " << fmt(reg.rmse) << ", severity agreement "
              << fmt(sev.agreement) << "\n";
    return kOk;
  };
}

}  // namespace adcrnn::cli
