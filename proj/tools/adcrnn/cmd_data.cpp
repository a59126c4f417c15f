// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include <CLI11.hpp>

#include "adcrnn/anova.hpp"
#include "adcrnn/error.hpp"
#include "adcrnn/synthetic.hpp"
#include "common.hpp"

namespace adcrnn::cli {

Runner add_gen_synthetic(CLI::App& app, const Invocation& inv) {
  auto spec = std::make_shared<SyntheticSpec>();
  auto out_dir = std::make_shared<std::string>();
  app.add_option("--out-dir", *out_dir, "Output directory")->required();
  app.add_option("--n", spec->n_dialogues, "Number of dialogues")->capture_default_str();
  app.add_option("--seed", spec->seed, "Master seed")->capture_default_str();
  app.add_option("--separation", spec->separation, "Class separation in noise std units")->capture_default_str();
  app.add_option("--mmse-noise", spec->mmse_noise, "Latent severity noise in MMSE points")->capture_default_str();
  app.add_option("--acoustic-dim", spec->dims.acoustic)->capture_default_str();
  app.add_option("--textual-dim", spec->dims.textual)->capture_default_str();
  app.add_option("--pos-dim", spec->dims.pos, "0 omits POS histograms")->capture_default_str();
  app.add_option("--hc-dim", spec->dims.hc)->capture_default_str();
  app.add_option("--min-utterances", spec->min_utterances)->capture_default_str();
  app.add_option("--max-utterances", spec->max_utterances)->capture_default_str();

  return [spec, out_dir, &inv] {
    try {
      spec->validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    const std::filesystem::path dir(*out_dir);
    ensure_dir(dir);
    const DatasetManifest m = write_synthetic(*spec, dir);
    json resolved;
    resolved["synthetic"] = {{"n_dialogues", spec->n_dialogues},
                             {"seed", spec->seed},
                             {"separation", spec->separation},
                             {"mmse_noise", spec->mmse_noise},
                             {"acoustic_dim", spec->dims.acoustic},
                             {"textual_dim", spec->dims.textual},
                             {"pos_dim", spec->dims.pos},
                             {"hc_dim", spec->dims.hc},
                             {"min_utterances", spec->min_utterances},
                             {"max_utterances", spec->max_utterances},
                             {"participant_rate", spec->participant_rate}};
    resolved["manifest"] = (dir / "manifest.json").string();
    write_run_json(dir, inv, "gen-synthetic", resolved);
    std::cout << "wrote " << m.dialogues.size() << " dialogues to " << dir.string() << "\n";
    return kOk;
  };
}

Runner add_select_features(CLI::App& app, const Invocation& inv) {
  struct Opts {
    std::string manifest, out_dir;
    double alpha = 0.05;
  };
  auto o = std::make_shared<Opts>();
  app.add_option("--manifest", o->manifest, "Dataset manifest")->required();
  app.add_option("--alpha", o->alpha, "Keep features with p <= alpha")->capture_default_str();
  app.add_option("--out-dir", o->out_dir, "Output directory")->required();

  return [o, &inv] {
    if (!(o->alpha > 0.0 && o->alpha <= 1.0)) throw UsageError("--alpha must lie in (0, 1]");
    const std::filesystem::path dir(o->out_dir);
    ensure_dir(dir);
    write_run_json(dir, inv, "select-features", json{{"manifest", o->manifest}, {"alpha", o->alpha}});

    const DatasetManifest m = load_manifest(o->manifest);
    const FeatureMatrix fm = hc_feature_matrix(load_dataset(m));
    const SelectionResult sel = select_features(fm, o->alpha);

    json features = json::array();
    std::string csv = "index,name,f,p,kept\n";
    const auto mask = sel.mask();
    for (std::size_t c = 0; c < fm.cols(); ++c) {
      features.push_back({{"index", c},
                          {"name", fm.names[c]},
                          {"f", number_or_null(sel.f_values[c])},
                          {"p", sel.p_values[c]},
                          {"kept", static_cast<bool>(mask[c])}});
      csv += std::to_string(c) + "," + fm.names[c] + "," + fmt(sel.f_values[c]) + "," + fmt(sel.p_values[c]) + "," +
             (mask[c] ? "1" : "0") + "\n";
    }
    json mask_json = json::array();
    for (bool b : mask) mask_json.push_back(b);
    const json report{{"alpha", sel.alpha},
                      {"n_samples", fm.rows.size()},
                      {"n_features", fm.cols()},
                      {"kept_indices", sel.kept_indices},
                      {"mask", mask_json},
                      {"features", features}};
    write_text_file(dir / "selection.json", report.dump(2) + "\n");
    write_text_file(dir / "selection.csv", csv);
    std::cout << "kept " << sel.kept_indices.size() << " of " << fm.cols() << " HC features at alpha " << o->alpha
              << "\n";
    return kOk;
  };
}

}  // namespace adcrnn::cli
