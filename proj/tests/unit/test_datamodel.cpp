// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "adcrnn/checkpoint.hpp"
#include "adcrnn/datamodel.hpp"
#include "adcrnn/error.hpp"
#include "adcrnn/synthetic.hpp"
#include "support/tempdir.hpp"

using namespace adcrnn;
using testutil::TempDir;

namespace {

const char* kSmall =
    "DLG v1 id=d1 ad=1 mmse=17\n"
    "HC 3 0.5 -1 2\n"
    "UTT INV A 2 0.1 0.2 T 3 1 2 3\n"
    "UTT PAR A 2 -0.3 4e-5 T 3 0 0 1.25\n";

std::string expect_data_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const DataError& e) {
    return e.what();
  }
  FAIL("expected DataError");
  return {};
}

}  // namespace

TEST_CASE("parse a small dialogue") {
  const Dialogue d = parse_dialogue(kSmall);
  CHECK(d.id == "d1");
  CHECK(d.label_ad == true);
  CHECK(d.label_mmse == 17);
  CHECK(d.hc == std::vector<double>{0.5, -1, 2});
  REQUIRE(d.length() == 2);
  CHECK(d.utterances[0].speaker == Speaker::Investigator);
  CHECK(d.utterances[1].speaker == Speaker::Participant);
  CHECK(d.utterances[1].acoustic == std::vector<double>{-0.3, 4e-5});
  CHECK_FALSE(d.utterances[0].pos.has_value());
}

TEST_CASE("unknown labels parse as absent") {
  const Dialogue d = parse_dialogue("DLG v1 id=x ad=? mmse=?\nHC 0\nUTT PAR A 1 1 T 1 1\n");
  CHECK_FALSE(d.label_ad.has_value());
  CHECK_FALSE(d.label_mmse.has_value());
  CHECK(d.hc.empty());
}

TEST_CASE("write/parse round trip is exact") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  Dialogue d;
  d.id = "rt";
  d.label_ad = false;
  d.label_mmse = 29;
  for (int i = 0; i < 5; ++i) d.hc.push_back(u(rng) / 7.0);
  for (int k = 0; k < 4; ++k) {
    Utterance ut;
    ut.speaker = k % 2 ? Speaker::Participant : Speaker::Investigator;
    for (int i = 0; i < 3; ++i) ut.acoustic.push_back(u(rng) * 1e-9);
    for (int i = 0; i < 6; ++i) ut.textual.push_back(u(rng) / 3.0);
    ut.pos = std::vector<double>{0.25, 0.5, 0.25};
    d.utterances.push_back(ut);
  }
  const std::string text = write_dialogue(d);
  const Dialogue back = parse_dialogue(text, FeatureDims{3, 6, 3, 5});
  CHECK(back == d);
  CHECK(write_dialogue(back) == text);
}

TEST_CASE("malformed files report file and line") {
  SUBCASE("mmse out of range") {
    auto msg = expect_data_error([] { parse_dialogue("DLG v1 id=a ad=1 mmse=31\nHC 0\n", {}, "f.dlg"); });
    CHECK(msg.find("f.dlg:1") != std::string::npos);
    CHECK(msg.find("mmse") != std::string::npos);
  }
  SUBCASE("unknown speaker") {
    auto msg = expect_data_error(
        [] { parse_dialogue("DLG v1 id=a ad=1 mmse=3\nHC 0\nUTT DOC A 1 0 T 1 0\n", {}, "g.dlg"); });
    CHECK(msg.find("g.dlg:3") != std::string::npos);
    CHECK(msg.find("DOC") != std::string::npos);
  }
  SUBCASE("dim mismatch against the manifest") {
    auto msg = expect_data_error([] { parse_dialogue(kSmall, FeatureDims{2, 4, 0, 3}, "h.dlg"); });
    CHECK(msg.find("h.dlg:3") != std::string::npos);
    CHECK(msg.find("textual") != std::string::npos);
  }
  SUBCASE("inconsistent utterance dims") {
    auto msg = expect_data_error(
        [] { parse_dialogue("DLG v1 id=a ad=0 mmse=?\nHC 0\nUTT PAR A 1 0 T 1 0\nUTT PAR A 2 0 0 T 1 0\n"); });
    CHECK(msg.find(":4") != std::string::npos);
  }
  SUBCASE("bad number") {
    auto msg = expect_data_error([] { parse_dialogue("DLG v1 id=a ad=0 mmse=?\nHC 1 abc\n"); });
    CHECK(msg.find(":2") != std::string::npos);
  }
  SUBCASE("no utterances") {
    expect_data_error([] { parse_dialogue("DLG v1 id=a ad=0 mmse=?\nHC 0\n"); });
  }
  SUBCASE("unexpected POS block") {
    expect_data_error(
        [] { parse_dialogue("DLG v1 id=a ad=0 mmse=?\nHC 0\nUTT PAR A 1 0 T 1 0 P 1 1\n", FeatureDims{1, 1, 0, 0}); });
  }
}

TEST_CASE("manifest validation") {
  TempDir dir;
  testutil::write_text(dir / "a.dlg", kSmall);
  testutil::write_text(dir / "b.dlg", std::string(kSmall).replace(10, 2, "d2"));
  auto manifest = [&](const std::string& body) {
    testutil::write_text(dir / "m.json", body);
    return dir / "m.json";
  };
  SUBCASE("valid with folds") {
    auto m = load_manifest(manifest(
        R"({"acoustic_dim":2,"textual_dim":3,"hc_dim":3,"dialogues":["a.dlg","b.dlg"],"folds":{"d1":0,"d2":1}})"));
    CHECK(m.ids == std::vector<std::string>{"d1", "d2"});
    CHECK(load_dataset(m).size() == 2);
  }
  SUBCASE("empty dataset") {
    auto msg = expect_data_error(
        [&] { load_manifest(manifest(R"({"acoustic_dim":2,"textual_dim":3,"dialogues":[]})")); });
    CHECK(msg.find("empty dataset") != std::string::npos);
  }
  SUBCASE("missing file") {
    auto msg = expect_data_error([&] {
      load_manifest(manifest(R"({"acoustic_dim":2,"textual_dim":3,"hc_dim":3,"dialogues":["zz.dlg"]})"));
    });
    CHECK(msg.find("zz.dlg") != std::string::npos);
  }
  SUBCASE("duplicate id") {
    auto msg = expect_data_error([&] {
      load_manifest(manifest(R"({"acoustic_dim":2,"textual_dim":3,"hc_dim":3,"dialogues":["a.dlg","a.dlg"]})"));
    });
    CHECK(msg.find("duplicate") != std::string::npos);
  }
  SUBCASE("dims disagree with files") {
    expect_data_error([&] {
      load_manifest(manifest(R"({"acoustic_dim":5,"textual_dim":3,"hc_dim":3,"dialogues":["a.dlg"]})"));
    });
  }
  SUBCASE("folds must cover every dialogue") {
    expect_data_error([&] {
      load_manifest(manifest(
          R"({"acoustic_dim":2,"textual_dim":3,"hc_dim":3,"dialogues":["a.dlg","b.dlg"],"folds":{"d1":0}})"));
    });
  }
  SUBCASE("not json") { expect_data_error([&] { load_manifest(manifest("{")); }); }
}

TEST_CASE("norm stats use the population std with a floor") {
  Dialogue a = parse_dialogue("DLG v1 id=a ad=0 mmse=?\nHC 1 1\nUTT PAR A 1 1 T 1 5\nUTT PAR A 1 3 T 1 5\n");
  Dialogue b = parse_dialogue("DLG v1 id=b ad=1 mmse=?\nHC 1 3\nUTT PAR A 1 5 T 1 5\n");
  const auto stats = compute_norm_stats({a, b});
  CHECK(stats.acoustic.mean[0] == doctest::Approx(3.0));
  CHECK(stats.acoustic.std[0] == doctest::Approx(std::sqrt(8.0 / 3.0)));
  CHECK(stats.hc.mean[0] == doctest::Approx(2.0));
  CHECK(stats.hc.std[0] == doctest::Approx(1.0));
  CHECK(stats.textual.std[0] == 0.0);
  const auto out = normalize({a, b}, stats);
  CHECK(out[0].utterances[0].acoustic[0] == doctest::Approx(-2.0 / std::sqrt(8.0 / 3.0)));
  CHECK(out[0].utterances[0].textual[0] == 0.0);  // constant column: (x - mean) / 1e-8
  CHECK(out[1].hc[0] == doctest::Approx(1.0));
}

TEST_CASE("input pipeline: normalize, select HC, merge POS") {
  Dialogue d = parse_dialogue("DLG v1 id=a ad=0 mmse=?\nHC 3 1 2 3\nUTT PAR A 1 1 T 2 1 2 P 2 0.5 0.5\n");
  InputPipeline p;
  p.hc_mask = std::vector<std::size_t>{0, 2};
  p.use_pos = true;
  auto out = p.apply({d});
  CHECK(out[0].hc == std::vector<double>{1, 3});
  CHECK(out[0].utterances[0].textual == std::vector<double>{1, 2, 0.5, 0.5});
  CHECK_FALSE(out[0].utterances[0].pos.has_value());
  p.use_pos = false;
  out = p.apply({d});
  CHECK(out[0].utterances[0].textual == std::vector<double>{1, 2});
  CHECK_FALSE(out[0].utterances[0].pos.has_value());
}

TEST_CASE("hc feature matrix skips unlabelled dialogues") {
  Dialogue a = parse_dialogue("DLG v1 id=a ad=0 mmse=?\nHC 2 1 2\nUTT PAR A 1 1 T 1 1\n");
  Dialogue b = parse_dialogue("DLG v1 id=b ad=? mmse=?\nHC 2 3 4\nUTT PAR A 1 1 T 1 1\n");
  Dialogue c = parse_dialogue("DLG v1 id=c ad=1 mmse=?\nHC 2 5 6\nUTT PAR A 1 1 T 1 1\n");
  const FeatureMatrix m = hc_feature_matrix({a, b, c});
  CHECK(m.cols() == 2);
  CHECK(m.rows.size() == 2);
  CHECK(m.labels == std::vector<int>{0, 1});
  m.validate();
}

TEST_CASE("checkpoint archive round trip and byte stability") {
  TensorArchive a;
  a["b"] = Tensor({2, 3}, {1, 2, 3, 4, 5, -6e-300});
  a["a"] = Tensor::vector({0.1, 0.2});
  a["s"] = Tensor({}, {7.0});
  const std::string bytes = encode_archive(a);
  CHECK(bytes.substr(0, 8) == "ADCRNNCK");
  CHECK(decode_archive(bytes) == a);
  CHECK(encode_archive(decode_archive(bytes)) == bytes);
  CHECK_THROWS_AS(decode_archive(bytes.substr(0, bytes.size() - 3)), DataError);
  CHECK_THROWS_AS(decode_archive("NOTACKPT" + bytes.substr(8)), DataError);

  TempDir dir;
  ParamStore ps;
  ps.add("w", {2}).value = Tensor::vector({1.5, 2.5});
  save_checkpoint(dir / "p.ckpt", ps);
  const auto back = load_checkpoint(dir / "p.ckpt");
  CHECK(back.at("w") == ps.get("w").value);
  ParamStore other;
  other.add("w", {2});
  other.restore(back);
  CHECK(other.get("w").value == ps.get("w").value);
  ParamStore wrong;
  wrong.add("w", {3});
  CHECK_THROWS_AS(wrong.restore(back), DataError);
}

TEST_CASE("synthetic corpus") {
  SyntheticSpec spec;
  spec.n_dialogues = 20;
  spec.dims = {8, 16, 4, 6};
  spec.seed = 3;
  const auto ds = generate_synthetic(spec);
  REQUIRE(ds.size() == 20);
  int ad = 0;
  for (const auto& d : ds) {
    ad += *d.label_ad ? 1 : 0;
    CHECK(d.label_mmse.has_value());
    CHECK(*d.label_mmse >= 0);
    CHECK(*d.label_mmse <= 30);
    CHECK(d.length() >= spec.min_utterances);
    CHECK(d.length() <= spec.max_utterances);
    CHECK(d.hc.size() == 6);
    CHECK(d.utterances[0].pos->size() == 4);
  }
  CHECK(ad == 10);
  CHECK(generate_synthetic(spec) == ds);

  TempDir dir;
  const auto m = write_synthetic(spec, dir.path());
  const auto loaded = load_manifest(dir / "manifest.json");
  CHECK(loaded.ids == m.ids);
  const auto back = load_dataset(loaded);
  CHECK(back == ds);
}
