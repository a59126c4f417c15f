// SPDX-License-Identifier: Apache-2.0
#include "adcrnn/datamodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <json.hpp>

#include "adcrnn/error.hpp"
#include "json_util.hpp"

namespace adcrnn {
namespace {

using json = nlohmann::json;

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

class LineError {
 public:
  LineError(const std::string& source, std::size_t line) : source_(source), line_(line) {}
  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(source_ + ":" + std::to_string(line_) + ": " + msg);
  }

 private:
  const std::string& source_;
  std::size_t line_;
};

double parse_double(std::string_view tok, const LineError& err) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    err.fail("bad number '" + std::string(tok) + "'");
  }
  return v;
}

std::size_t parse_count(std::string_view tok, const LineError& err) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    err.fail("bad count '" + std::string(tok) + "'");
  }
  return v;
}

// Reads `<n> v1 .. vn` starting at toks[pos]; advances pos.
std::vector<double> read_block(const std::vector<std::string_view>& toks, std::size_t& pos,
                               const LineError& err, std::string_view what) {
  if (pos >= toks.size()) err.fail("missing length for " + std::string(what));
  const std::size_t n = parse_count(toks[pos++], err);
  if (toks.size() - pos < n) err.fail(std::string(what) + " block truncated");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = parse_double(toks[pos++], err);
  return v;
}

void check_dim(std::size_t got, std::size_t want, std::string_view what, const LineError& err) {
  if (got != want) {
    err.fail("dim mismatch for " + std::string(what) + ": expected " + std::to_string(want) +
             ", got " + std::to_string(got));
  }
}

void append_number(std::string& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

void append_block(std::string& out, const std::vector<double>& v) {
  out += std::to_string(v.size());
  for (double x : v) {
    out += ' ';
    append_number(out, x);
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open file: " + path.string());
  return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path.string());
  f << text;
  if (!f) throw DataError("write failed: " + path.string());
}

struct Accumulator {
  std::vector<double> sum, sumsq;
  std::size_t n = 0;

  void add(const std::vector<double>& v) {
    if (sum.empty()) {
      sum.assign(v.size(), 0.0);
      sumsq.assign(v.size(), 0.0);
    }
    if (v.size() != sum.size()) throw DataError("inconsistent feature dims while computing stats");
    for (std::size_t i = 0; i < v.size(); ++i) {
      sum[i] += v[i];
      sumsq[i] += v[i] * v[i];
    }
    ++n;
  }

  NormStats finish() const {
    NormStats s;
    s.mean.resize(sum.size());
    s.std.resize(sum.size());
    for (std::size_t i = 0; i < sum.size(); ++i) {
      const double m = sum[i] / static_cast<double>(n);
      const double var = std::max(0.0, sumsq[i] / static_cast<double>(n) - m * m);
      s.mean[i] = m;
      s.std[i] = std::sqrt(var);
    }
    return s;
  }
};

void apply_stats(std::vector<double>& v, const NormStats& s, std::string_view what) {
  if (s.mean.empty() && v.empty()) return;
  if (v.size() != s.mean.size()) {
    throw DataError("norm stats dim mismatch for " + std::string(what) + ": stats have " +
                    std::to_string(s.mean.size()) + ", features have " + std::to_string(v.size()));
  }
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (v[i] - s.mean[i]) / std::max(s.std[i], kStdFloor);
}

}  // namespace

std::string_view speaker_tag(Speaker s) { return s == Speaker::Investigator ? "INV" : "PAR"; }

void FeatureMatrix::validate() const {
  if (labels.size() != rows.size()) {
    throw DataError("feature matrix has " + std::to_string(rows.size()) + " rows but " +
                    std::to_string(labels.size()) + " labels");
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != names.size()) {
      throw DataError("feature matrix row " + std::to_string(r) + " has " +
                      std::to_string(rows[r].size()) + " values, expected " +
                      std::to_string(names.size()));
    }
  }
}

std::filesystem::path DatasetManifest::resolve(const std::filesystem::path& p) const {
  return p.is_absolute() ? p : base_dir / p;
}

Dialogue parse_dialogue(std::string_view text, const std::optional<FeatureDims>& expected,
                        const std::string& source) {
  Dialogue d;
  std::size_t line_no = 0;
  bool seen_header = false, seen_hc = false;
  std::size_t pos_start = 0;
  while (pos_start <= text.size()) {
    std::size_t nl = text.find('\n', pos_start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos_start, nl - pos_start);
    pos_start = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto toks = split_ws(line);
    if (toks.empty()) {
      if (nl == text.size()) break;
      continue;
    }
    const LineError err(source, line_no);

    if (!seen_header) {
      if (toks.size() != 5 || toks[0] != "DLG" || toks[1] != "v1") {
        err.fail("expected header 'DLG v1 id=<id> ad=<0|1|?> mmse=<0..30|?>'");
      }
      if (!toks[2].starts_with("id=") || toks[2].size() == 3) err.fail("missing id");
      d.id = std::string(toks[2].substr(3));
      if (!toks[3].starts_with("ad=")) err.fail("missing ad field");
      const auto ad = toks[3].substr(3);
      if (ad == "1") d.label_ad = true;
      else if (ad == "0") d.label_ad = false;
      else if (ad != "?") err.fail("ad must be 0, 1 or ?");
      if (!toks[4].starts_with("mmse=")) err.fail("missing mmse field");
      const auto mm = toks[4].substr(5);
      if (mm != "?") {
        int v = 0;
        const auto [ptr, ec] = std::from_chars(mm.data(), mm.data() + mm.size(), v);
        if (ec != std::errc() || ptr != mm.data() + mm.size()) {
          err.fail("mmse must be an integer or ?");
        }
        if (v < 0 || v > kMmseMax) err.fail("mmse out of range [0,30]: " + std::to_string(v));
        d.label_mmse = v;
      }
      seen_header = true;
      continue;
    }

    if (toks[0] == "HC") {
      if (seen_hc) err.fail("duplicate HC line");
      if (!d.utterances.empty()) err.fail("HC line must precede utterances");
      std::size_t p = 1;
      d.hc = read_block(toks, p, err, "HC");
      if (p != toks.size()) err.fail("trailing tokens after HC block");
      if (expected) check_dim(d.hc.size(), expected->hc, "HC", err);
      seen_hc = true;
      continue;
    }

    if (toks[0] != "UTT") err.fail("unknown record '" + std::string(toks[0]) + "'");
    if (!seen_hc) err.fail("HC line must precede utterances");
    if (toks.size() < 2) err.fail("missing speaker tag");
    Utterance u;
    if (toks[1] == "INV") u.speaker = Speaker::Investigator;
    else if (toks[1] == "PAR") u.speaker = Speaker::Participant;
    else err.fail("unknown speaker tag '" + std::string(toks[1]) + "'");
    std::size_t p = 2;
    if (p >= toks.size() || toks[p] != "A") err.fail("expected acoustic block 'A'");
    ++p;
    u.acoustic = read_block(toks, p, err, "acoustic");
    if (p >= toks.size() || toks[p] != "T") err.fail("expected textual block 'T'");
    ++p;
    u.textual = read_block(toks, p, err, "textual");
    if (p < toks.size()) {
      if (toks[p] != "P") err.fail("unexpected token '" + std::string(toks[p]) + "'");
      ++p;
      u.pos = read_block(toks, p, err, "POS");
      if (p != toks.size()) err.fail("trailing tokens after POS block");
    }
    if (expected) {
      check_dim(u.acoustic.size(), expected->acoustic, "acoustic", err);
      check_dim(u.textual.size(), expected->textual, "textual", err);
      if (expected->pos > 0) {
        if (!u.pos) err.fail("missing POS block (manifest pos_dim > 0)");
        check_dim(u.pos->size(), expected->pos, "POS", err);
      } else if (u.pos) {
        err.fail("unexpected POS block (manifest pos_dim = 0)");
      }
    } else if (!d.utterances.empty()) {
      const Utterance& first = d.utterances.front();
      check_dim(u.acoustic.size(), first.acoustic.size(), "acoustic", err);
      check_dim(u.textual.size(), first.textual.size(), "textual", err);
      if (u.pos.has_value() != first.pos.has_value()) err.fail("POS present on some utterances only");
      if (u.pos) check_dim(u.pos->size(), first.pos->size(), "POS", err);
    }
    d.utterances.push_back(std::move(u));
  }
  if (!seen_header) throw DataError(source + ": empty dialogue file");
  if (!seen_hc) throw DataError(source + ": missing HC line");
  if (d.utterances.empty()) throw DataError(source + ": dialogue has no utterances");
  return d;
}

std::string write_dialogue(const Dialogue& d) {
  std::string out = "DLG v1 id=" + d.id + " ad=";
  out += d.label_ad ? (*d.label_ad ? "1" : "0") : "?";
  out += " mmse=";
  out += d.label_mmse ? std::to_string(*d.label_mmse) : "?";
  out += "\nHC ";
  append_block(out, d.hc);
  out += '\n';
  for (const Utterance& u : d.utterances) {
    out += "UTT ";
    out += speaker_tag(u.speaker);
    out += " A ";
    append_block(out, u.acoustic);
    out += " T ";
    append_block(out, u.textual);
    if (u.pos) {
      out += " P ";
      append_block(out, *u.pos);
    }
    out += '\n';
  }
  return out;
}

Dialogue load_dialogue(const std::filesystem::path& path) {
  return parse_dialogue(read_file(path), std::nullopt, path.string());
}

Dialogue load_dialogue(const std::filesystem::path& path, const DatasetManifest& manifest) {
  return parse_dialogue(read_file(path), manifest.dims, path.string());
}

void save_dialogue(const std::filesystem::path& path, const Dialogue& d) {
  write_file(path, write_dialogue(d));
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw DataError("manifest " + path.string() + " does not parse: " + e.what());
  }
  DatasetManifest m;
  m.base_dir = path.parent_path();
  try {
    m.dims.acoustic = j.at("acoustic_dim").get<std::size_t>();
    m.dims.textual = j.at("textual_dim").get<std::size_t>();
    m.dims.pos = j.value("pos_dim", std::size_t{0});
    m.dims.hc = j.value("hc_dim", std::size_t{0});
    for (const auto& p : j.at("dialogues")) m.dialogues.emplace_back(p.get<std::string>());
    if (j.contains("folds")) m.folds = j.at("folds").get<std::map<std::string, int>>();
    if (j.contains("norm_stats")) {
      m.norm_stats = detail::dataset_stats_from_json(j.at("norm_stats"));
    }
  } catch (const json::exception& e) {
    throw DataError("manifest " + path.string() + ": " + e.what());
  }
  if (m.dialogues.empty()) throw DataError("manifest " + path.string() + ": empty dataset");

  std::set<std::string> seen;
  for (const auto& rel : m.dialogues) {
    const auto file = m.resolve(rel);
    if (!std::filesystem::exists(file)) throw DataError("missing dialogue file: " + file.string());
    Dialogue d = load_dialogue(file, m);
    if (!seen.insert(d.id).second) {
      throw DataError("duplicate dialogue id '" + d.id + "' in " + file.string());
    }
    m.ids.push_back(d.id);
  }
  if (m.folds) {
    for (const auto& [id, fold] : *m.folds) {
      if (!seen.contains(id)) throw DataError("fold assignment for unknown dialogue '" + id + "'");
      if (fold < 0) throw DataError("negative fold index for '" + id + "'");
    }
    for (const auto& id : m.ids) {
      if (!m.folds->contains(id)) throw DataError("dialogue '" + id + "' has no fold assignment");
    }
  }
  if (m.norm_stats) {
    const auto& s = *m.norm_stats;
    auto check = [](const NormStats& st, std::size_t dim, const char* what) {
      if (!st.mean.empty() && st.mean.size() != dim) {
        throw DataError(std::string("norm_stats.") + what + " has wrong dim");
      }
    };
    check(s.acoustic, m.dims.acoustic, "acoustic");
    check(s.textual, m.dims.textual, "textual");
    check(s.pos, m.dims.pos, "pos");
    check(s.hc, m.dims.hc, "hc");
  }
  return m;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  json j;
  j["acoustic_dim"] = m.dims.acoustic;
  j["textual_dim"] = m.dims.textual;
  j["pos_dim"] = m.dims.pos;
  j["hc_dim"] = m.dims.hc;
  json paths = json::array();
  for (const auto& p : m.dialogues) paths.push_back(p.generic_string());
  j["dialogues"] = std::move(paths);
  if (m.folds) j["folds"] = *m.folds;
  if (m.norm_stats) {
    j["norm_stats"] = detail::dataset_stats_to_json(*m.norm_stats);
  }
  write_file(path, j.dump(2) + "\n");
}

std::vector<Dialogue> load_dataset(const DatasetManifest& manifest) {
  std::vector<Dialogue> out;
  out.reserve(manifest.dialogues.size());
  for (const auto& rel : manifest.dialogues) out.push_back(load_dialogue(manifest.resolve(rel), manifest));
  return out;
}

DatasetNormStats compute_norm_stats(const std::vector<Dialogue>& dialogues) {
  if (dialogues.empty()) throw DataError("cannot compute normalization stats on an empty split");
  Accumulator ac, tx, ps, hc;
  for (const Dialogue& d : dialogues) {
    hc.add(d.hc);
    for (const Utterance& u : d.utterances) {
      ac.add(u.acoustic);
      tx.add(u.textual);
      if (u.pos) ps.add(*u.pos);
    }
  }
  DatasetNormStats s;
  s.acoustic = ac.finish();
  s.textual = tx.finish();
  if (ps.n > 0) s.pos = ps.finish();
  s.hc = hc.finish();
  return s;
}

std::vector<Dialogue> normalize(const std::vector<Dialogue>& dialogues, const DatasetNormStats& stats) {
  std::vector<Dialogue> out = dialogues;
  for (Dialogue& d : out) {
    apply_stats(d.hc, stats.hc, "HC");
    for (Utterance& u : d.utterances) {
      apply_stats(u.acoustic, stats.acoustic, "acoustic");
      apply_stats(u.textual, stats.textual, "textual");
      if (u.pos) apply_stats(*u.pos, stats.pos, "POS");
    }
  }
  return out;
}

std::vector<Dialogue> merge_pos_into_textual(std::vector<Dialogue> dialogues) {
  for (Dialogue& d : dialogues) {
    for (Utterance& u : d.utterances) {
      if (!u.pos) continue;
      u.textual.insert(u.textual.end(), u.pos->begin(), u.pos->end());
      u.pos.reset();
    }
  }
  return dialogues;
}

std::vector<Dialogue> apply_hc_mask(std::vector<Dialogue> dialogues, const std::vector<std::size_t>& kept) {
  for (Dialogue& d : dialogues) {
    std::vector<double> hc;
    hc.reserve(kept.size());
    for (std::size_t j : kept) {
      if (j >= d.hc.size()) {
        throw DataError("HC mask index " + std::to_string(j) + " out of range for dialogue '" + d.id +
                        "' with " + std::to_string(d.hc.size()) + " HC features");
      }
      hc.push_back(d.hc[j]);
    }
    d.hc = std::move(hc);
  }
  return dialogues;
}

FeatureMatrix hc_feature_matrix(const std::vector<Dialogue>& dialogues) {
  FeatureMatrix m;
  for (const Dialogue& d : dialogues) {
    if (!d.label_ad) continue;
    if (m.names.empty()) {
      for (std::size_t j = 0; j < d.hc.size(); ++j) m.names.push_back("hc" + std::to_string(j));
    }
    m.rows.push_back(d.hc);
    m.labels.push_back(*d.label_ad ? 1 : 0);
  }
  m.validate();
  return m;
}

}  // namespace adcrnn

namespace adcrnn {

std::vector<Dialogue> InputPipeline::apply(std::vector<Dialogue> dialogues) const {
  if (norm_stats) dialogues = normalize(dialogues, *norm_stats);
  if (hc_mask) dialogues = apply_hc_mask(std::move(dialogues), *hc_mask);
  if (use_pos) return merge_pos_into_textual(std::move(dialogues));
  for (Dialogue& d : dialogues)
    for (Utterance& u : d.utterances) u.pos.reset();
  return dialogues;
}

}  // namespace adcrnn
