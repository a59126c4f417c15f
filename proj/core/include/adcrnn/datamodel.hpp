// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace adcrnn {

enum class Speaker { Investigator, Participant };

std::string_view speaker_tag(Speaker s);  // "INV" / "PAR"

/// One aligned speech turn.
struct Utterance {
  Speaker speaker = Speaker::Participant;
  std::vector<double> acoustic;
  std::vector<double> textual;
  std::optional<std::vector<double>> pos;  // tag histogram
  std::optional<std::uint32_t> duration_ms;

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

inline constexpr int kMmseMax = 30;

/// A conversation: ordered utterances plus conversation-level hand-crafted (HC) features.
struct Dialogue {
  std::string id;
  std::vector<Utterance> utterances;
  std::vector<double> hc;
  std::optional<bool> label_ad;
  std::optional<int> label_mmse;  // 0..30

  std::size_t length() const { return utterances.size(); }
  friend bool operator==(const Dialogue&, const Dialogue&) = default;
};

struct FeatureDims {
  std::size_t acoustic = 0;
  std::size_t textual = 0;
  std::size_t pos = 0;  // 0 = no POS section in files
  std::size_t hc = 0;

  friend bool operator==(const FeatureDims&, const FeatureDims&) = default;
};

/// Samples × named features, with one class id per sample.
struct FeatureMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;

  std::size_t cols() const { return names.size(); }
  /// Throws DataError unless every row has names.size() entries and labels match rows.
  void validate() const;
};

/// Per-dimension mean and (population) standard deviation.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

struct DatasetNormStats {
  NormStats acoustic;
  NormStats textual;
  NormStats pos;
  NormStats hc;

  friend bool operator==(const DatasetNormStats&, const DatasetNormStats&) = default;
};

struct DatasetManifest {
  FeatureDims dims;
  std::filesystem::path base_dir;               // directory relative paths resolve against
  std::vector<std::filesystem::path> dialogues;  // as written in the manifest
  std::vector<std::string> ids;                  // parallel to `dialogues`, filled on load
  std::optional<std::map<std::string, int>> folds;
  std::optional<DatasetNormStats> norm_stats;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

// ---- feature files --------------------------------------------------------

/// Parses the line-oriented dialogue format. `expected`, when given, is
/// enforced on every vector; `source` names the input in error messages.
Dialogue parse_dialogue(std::string_view text, const std::optional<FeatureDims>& expected = {},
                        const std::string& source = "<memory>");
/// Canonical text form: shortest round-trip decimal for every value.
std::string write_dialogue(const Dialogue& d);

Dialogue load_dialogue(const std::filesystem::path& path);
Dialogue load_dialogue(const std::filesystem::path& path, const DatasetManifest& manifest);
void save_dialogue(const std::filesystem::path& path, const Dialogue& d);

// ---- manifests ------------------------------------------------------------

/// Loads and validates a manifest: every referenced file must exist and
/// parse with the declared dims, ids must be unique and folds (if any)
/// must cover exactly the listed dialogues.
DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
std::vector<Dialogue> load_dataset(const DatasetManifest& manifest);

// ---- normalization --------------------------------------------------------

inline constexpr double kStdFloor = 1e-8;

/// Statistics over the given (training) dialogues. Utterance-level groups
/// pool every utterance; HC pools one row per dialogue.
DatasetNormStats compute_norm_stats(const std::vector<Dialogue>& dialogues);
/// (x - mean) / max(std, 1e-8) for every feature group present.
std::vector<Dialogue> normalize(const std::vector<Dialogue>& dialogues, const DatasetNormStats& stats);

/// Appends each utterance's POS histogram to its textual vector (textual
/// first) and clears `pos`. Utterances without POS are left unchanged.
std::vector<Dialogue> merge_pos_into_textual(std::vector<Dialogue> dialogues);

/// Keeps only the HC columns listed in `kept` (ascending indices).
std::vector<Dialogue> apply_hc_mask(std::vector<Dialogue> dialogues, const std::vector<std::size_t>& kept);

/// HC features as a matrix labelled by AD status (1 = AD). Dialogues
/// without an AD label are skipped.
FeatureMatrix hc_feature_matrix(const std::vector<Dialogue>& dialogues);

}  // namespace adcrnn

namespace adcrnn {

/// Feature preparation applied identically at training and inference time:
/// z-normalization with raw-feature statistics, HC column selection, then
/// either POS-into-textual merging or POS removal.
struct InputPipeline {
  std::optional<DatasetNormStats> norm_stats;
  std::optional<std::vector<std::size_t>> hc_mask;
  bool use_pos = false;

  std::vector<Dialogue> apply(std::vector<Dialogue> dialogues) const;
};

}  // namespace adcrnn
