// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "adcrnn/evaluation.hpp"

namespace CLI {
class App;
}

namespace adcrnn::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kDivergence = 4 };

/// Thrown by a subcommand to report a usage problem detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Invocation {
  std::vector<std::string> argv;
};

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);
void ensure_dir(const std::filesystem::path& dir);

/// Writes `run.json` (argv plus the resolved configuration) into `dir`.
void write_run_json(const std::filesystem::path& dir, const Invocation& inv, const std::string& command,
                    json resolved);

/// NaN and infinities become null.
json number_or_null(double v);
std::string fmt(double v);  // shortest round-trip decimal; "nan" for NaN

struct PredictionRow {
  std::string id;
  double p_ad = 0.5;
  bool pred_ad = false;
  double pred_mmse = 0.0;
  std::size_t members = 1;
  std::size_t votes_ad = 0;
  std::optional<bool> true_ad;
  std::optional<int> true_mmse;
};

/// CSV with header: id,p_ad,pred_ad,pred_mmse,members,votes_ad,true_ad,true_mmse
/// (truth cells empty when unknown).
std::string predictions_csv(const std::vector<PredictionRow>& rows);
std::vector<PredictionRow> parse_predictions_csv(const std::string& text, const std::string& source);

json classification_json(const ClassificationMetrics& m);
json regression_json(const RegressionMetrics& m);

// Subcommand registration; each returns the callback run after parsing.
using Runner = std::function<int()>;
Runner add_gen_synthetic(CLI::App& app, const Invocation& inv);
Runner add_select_features(CLI::App& app, const Invocation& inv);
Runner add_train(CLI::App& app, const Invocation& inv);
Runner add_evaluate(CLI::App& app, const Invocation& inv);
Runner add_predict(CLI::App& app, const Invocation& inv);
Runner add_ensemble(CLI::App& app, const Invocation& inv);

}  // namespace adcrnn::cli
