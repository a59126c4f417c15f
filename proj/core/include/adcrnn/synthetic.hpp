// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "adcrnn/datamodel.hpp"

namespace adcrnn {

/// Synthetic corpus with a controllable class signal.
///
/// Labels are balanced. MMSE is drawn from N(17, 4) for AD and N(28, 1.5)
/// otherwise, clamped to [0, 30] and rounded. Features are unit Gaussian
/// noise. Participant utterances and HC vectors of AD dialogues are shifted
/// by `separation` (times a fixed random sign) on the first k = max(1, dim / 8)
/// dimensions. The next k dimensions carry a severity shift separation * z
/// with z = (28 - (mmse + mmse_noise * N(0, 1))) / 11, roughly 0 for non-AD
/// and 1 for AD. Investigator turns are pure noise. With separation 0 the
/// features carry no label information.
struct SyntheticSpec {
  std::size_t n_dialogues = 108;
  FeatureDims dims{128, 1024, 0, 23};
  double separation = 3.0;  // in units of the per-dimension noise std
  double mmse_noise = 1.0;  // MMSE points
  std::uint64_t seed = 0;
  std::size_t min_utterances = 7;
  std::size_t max_utterances = 25;
  double participant_rate = 0.6;

  void validate() const;
};

std::vector<Dialogue> generate_synthetic(const SyntheticSpec& spec);

/// Writes `dialogues/<id>.dlg` files and `manifest.json` under `out_dir`
/// and returns the manifest (as it would be loaded back).
DatasetManifest write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

}  // namespace adcrnn
