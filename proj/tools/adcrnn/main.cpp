// SPDX-License-Identifier: Apache-2.0
// adcrnn: dialogue-level AD detection and MMSE regression from the command line.
#include <iostream>

#include <CLI11.hpp>

#include "adcrnn/error.hpp"
#include "common.hpp"

using namespace adcrnn;

int main(int argc, char** argv) {
  cli::Invocation inv;
  for (int i = 0; i < argc; ++i) inv.argv.emplace_back(argv[i]);

  CLI::App app{"adcrnn: CRNN for Alzheimer's detection and MMSE regression from dialogue features"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "adcrnn 0.1.0");

  std::vector<std::pair<CLI::App*, cli::Runner>> commands;
  auto add = [&](const char* name, const char* help, auto registrar) {
    CLI::App* sub = app.add_subcommand(name, help);
    commands.emplace_back(sub, registrar(*sub, inv));
  };
  add("gen-synthetic", "Write a synthetic corpus (feature files + manifest)", cli::add_gen_synthetic);
  add("select-features", "ANOVA screening of the hand-crafted features", cli::add_select_features);
  add("train", "Cross-validated training", cli::add_train);
  add("evaluate", "Metrics table, JSON report and severity plot", cli::add_evaluate);
  add("predict", "Per-dialogue AD probability and MMSE, ensembling several checkpoints", cli::add_predict);
  add("ensemble", "Combine prediction tables by majority vote and median", cli::add_ensemble);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kOk : cli::kUsage;
  }

  try {
    for (auto& [sub, run] : commands) {
      if (sub->parsed()) return run();
    }
    return cli::kUsage;
  } catch (const cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return cli::kUsage;
  } catch (const ShapeError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return cli::kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return cli::kUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return cli::kDivergence;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return cli::kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kData;
  }
}
