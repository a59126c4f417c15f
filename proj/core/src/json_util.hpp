// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include "adcrnn/datamodel.hpp"
#include "adcrnn/error.hpp"

namespace adcrnn::detail {

inline nlohmann::json stats_to_json(const NormStats& s) {
  return nlohmann::json{{"mean", s.mean}, {"std", s.std}};
}

inline NormStats stats_from_json(const nlohmann::json& j) {
  NormStats s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.std = j.at("std").get<std::vector<double>>();
  if (s.mean.size() != s.std.size()) throw DataError("norm_stats mean/std length mismatch");
  return s;
}

inline nlohmann::json dataset_stats_to_json(const DatasetNormStats& s) {
  return {{"acoustic", stats_to_json(s.acoustic)},
          {"textual", stats_to_json(s.textual)},
          {"pos", stats_to_json(s.pos)},
          {"hc", stats_to_json(s.hc)}};
}

inline DatasetNormStats dataset_stats_from_json(const nlohmann::json& ns) {
  DatasetNormStats s;
  if (ns.contains("acoustic")) s.acoustic = stats_from_json(ns.at("acoustic"));
  if (ns.contains("textual")) s.textual = stats_from_json(ns.at("textual"));
  if (ns.contains("pos")) s.pos = stats_from_json(ns.at("pos"));
  if (ns.contains("hc")) s.hc = stats_from_json(ns.at("hc"));
  return s;
}

}  // namespace adcrnn::detail
