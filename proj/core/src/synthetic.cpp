// SPDX-License-Identifier: Apache-2.0
#include "adcrnn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "adcrnn/error.hpp"
#include "adcrnn/rng.hpp"

namespace adcrnn {
namespace {

// Dims [0, k) carry the class shift, dims [k, 2k) the severity shift
// (when the vector is wide enough), with k = max(1, dim / 8).
struct Signal {
  std::size_t k = 0;
  std::size_t severity_end = 0;
  std::vector<double> sign;
};

Signal make_signal(std::size_t dim, Rng& rng) {
  Signal s;
  s.k = dim == 0 ? 0 : std::max<std::size_t>(1, dim / 8);
  s.severity_end = dim >= 2 * s.k ? 2 * s.k : s.k;
  for (std::size_t i = 0; i < s.severity_end; ++i) s.sign.push_back(uniform01(rng) < 0.5 ? -1.0 : 1.0);
  return s;
}

std::vector<double> draw(std::size_t dim, const Signal& sig, double class_shift, double severity_shift, Rng& rng) {
  std::vector<double> v(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    v[i] = standard_normal(rng);
    if (i < sig.k) {
      v[i] += class_shift * sig.sign[i];
    } else if (i < sig.severity_end) {
      v[i] += severity_shift * sig.sign[i];
    }
  }
  return v;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_dialogues < 2) throw std::invalid_argument("synthetic: need at least 2 dialogues");
  if (dims.acoustic == 0 || dims.textual == 0) throw std::invalid_argument("synthetic: acoustic/textual dims must be positive");
  if (!(separation >= 0.0) || !std::isfinite(separation)) throw std::invalid_argument("synthetic: separation must be >= 0");
  if (!(mmse_noise >= 0.0)) throw std::invalid_argument("synthetic: mmse_noise must be >= 0");
  if (min_utterances == 0 || min_utterances > max_utterances) {
    throw std::invalid_argument("synthetic: invalid utterance count range");
  }
  if (!(participant_rate > 0.0 && participant_rate <= 1.0)) {
    throw std::invalid_argument("synthetic: participant_rate must lie in (0, 1]");
  }
}

std::vector<Dialogue> generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed, "data-gen");
  const Signal sig_a = make_signal(spec.dims.acoustic, rng);
  const Signal sig_t = make_signal(spec.dims.textual, rng);
  const Signal sig_h = make_signal(spec.dims.hc, rng);

  std::vector<bool> labels(spec.n_dialogues);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i < spec.n_dialogues / 2;
  for (std::size_t i = labels.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i - 1)));
    const bool tmp = labels[i - 1];
    labels[i - 1] = labels[j];
    labels[j] = tmp;
  }

  std::vector<Dialogue> out;
  out.reserve(spec.n_dialogues);
  for (std::size_t i = 0; i < spec.n_dialogues; ++i) {
    Dialogue d;
    char id[32];
    std::snprintf(id, sizeof(id), "S%03zu", i + 1);
    d.id = id;
    const bool ad = labels[i];
    const double raw = ad ? 17.0 + 4.0 * standard_normal(rng) : 28.0 + 1.5 * standard_normal(rng);
    const int mmse = static_cast<int>(std::lround(std::clamp(raw, 0.0, 30.0)));
    d.label_ad = ad;
    d.label_mmse = mmse;
    const double z = (28.0 - (mmse + spec.mmse_noise * standard_normal(rng))) / 11.0;
    const double class_shift = ad ? spec.separation : 0.0;
    const double severity_shift = spec.separation * z;

    d.hc = draw(spec.dims.hc, sig_h, class_shift, severity_shift, rng);
    const auto n_utt = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(spec.min_utterances),
                                                            static_cast<std::int64_t>(spec.max_utterances)));
    bool any_participant = false;
    for (std::size_t t = 0; t < n_utt; ++t) {
      Utterance u;
      const bool par = uniform01(rng) < spec.participant_rate || (t + 1 == n_utt && !any_participant);
      any_participant = any_participant || par;
      u.speaker = par ? Speaker::Participant : Speaker::Investigator;
      const double cs = par ? class_shift : 0.0, ss = par ? severity_shift : 0.0;
      u.acoustic = draw(spec.dims.acoustic, sig_a, cs, ss, rng);
      u.textual = draw(spec.dims.textual, sig_t, cs, ss, rng);
      if (spec.dims.pos > 0) {
        std::vector<double> h(spec.dims.pos);
        double total = 0.0;
        for (double& x : h) total += (x = -std::log(1.0 - uniform01(rng)));
        for (double& x : h) x /= total;
        u.pos = std::move(h);
      }
      d.utterances.push_back(std::move(u));
    }
    out.push_back(std::move(d));
  }
  return out;
}

DatasetManifest write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
  const auto dialogues = generate_synthetic(spec);
  std::filesystem::create_directories(out_dir / "dialogues");
  DatasetManifest m;
  m.dims = spec.dims;
  m.base_dir = out_dir;
  for (const Dialogue& d : dialogues) {
    const std::filesystem::path rel = std::filesystem::path("dialogues") / (d.id + ".dlg");
    save_dialogue(out_dir / rel, d);
    m.dialogues.push_back(rel);
    m.ids.push_back(d.id);
  }
  save_manifest(out_dir / "manifest.json", m);
  return m;
}

}  // namespace adcrnn
