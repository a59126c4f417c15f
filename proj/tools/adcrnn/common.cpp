// SPDX-License-Identifier: Apache-2.0
#include "common.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "adcrnn/error.hpp"

namespace adcrnn::cli {

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path.string());
  f << text;
  if (!f) throw DataError("write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_run_json(const std::filesystem::path& dir, const Invocation& inv, const std::string& command,
                    json resolved) {
  json j;
  j["tool"] = "adcrnn";
  j["command"] = command;
  j["argv"] = inv.argv;
  for (auto& [k, v] : resolved.items()) j[k] = v;
  write_text_file(dir / "run.json", j.dump(2) + "\n");
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string predictions_csv(const std::vector<PredictionRow>& rows) {
  std::string out = "id,p_ad,pred_ad,pred_mmse,members,votes_ad,true_ad,true_mmse\n";
  for (const auto& r : rows) {
    out += r.id + "," + fmt(r.p_ad) + "," + (r.pred_ad ? "1" : "0") + "," + fmt(r.pred_mmse) + "," +
           std::to_string(r.members) + "," + std::to_string(r.votes_ad) + ",";
    if (r.true_ad) out += *r.true_ad ? "1" : "0";
    out += ",";
    if (r.true_mmse) out += std::to_string(*r.true_mmse);
    out += "\n";
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double to_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw DataError(where + ": bad number '" + s + "'");
  return v;
}

}  // namespace

std::vector<PredictionRow> parse_predictions_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError(source + ": empty predictions file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  auto col = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  };
  const auto c_id = col("id"), c_p = col("p_ad"), c_pred = col("pred_ad"), c_mmse = col("pred_mmse");
  if (!c_id || !c_pred || !c_mmse) throw DataError(source + ": header needs id, pred_ad and pred_mmse");
  const auto c_tad = col("true_ad"), c_tmmse = col("true_mmse");
  std::vector<PredictionRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    const std::string where = source + ":" + std::to_string(line_no);
    if (cells.size() != header.size()) throw DataError(where + ": expected " + std::to_string(header.size()) + " cells");
    PredictionRow r;
    r.id = cells[*c_id];
    r.pred_ad = to_double(cells[*c_pred], where) >= 0.5;
    r.p_ad = c_p ? to_double(cells[*c_p], where) : (r.pred_ad ? 1.0 : 0.0);
    r.pred_mmse = to_double(cells[*c_mmse], where);
    if (c_tad && !cells[*c_tad].empty()) r.true_ad = to_double(cells[*c_tad], where) >= 0.5;
    if (c_tmmse && !cells[*c_tmmse].empty()) r.true_mmse = static_cast<int>(to_double(cells[*c_tmmse], where));
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw DataError(source + ": no prediction rows");
  return rows;
}

json classification_json(const ClassificationMetrics& m) {
  auto cls = [](const ClassMetrics& c) {
    return json{{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}, {"support", c.support}};
  };
  return json{{"accuracy", m.accuracy}, {"macro_f1", m.macro_f1}, {"non_ad", cls(m.non_ad)}, {"ad", cls(m.ad)},
              {"confusion", {{"tp", m.tp}, {"tn", m.tn}, {"fp", m.fp}, {"fn", m.fn}}}};
}

json regression_json(const RegressionMetrics& m) {
  json j{{"rmse", number_or_null(m.rmse)},
         {"r2_determination", number_or_null(m.r2)},
         {"r2_pearson_squared", number_or_null(m.r2_pearson)}};
  if (m.warning) j["warning"] = *m.warning;
  return j;
}

}  // namespace adcrnn::cli
