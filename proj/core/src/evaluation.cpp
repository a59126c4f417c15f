// SPDX-License-Identifier: Apache-2.0
#include "adcrnn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "adcrnn/error.hpp"

namespace adcrnn {
namespace {

double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassMetrics m;
  m.precision = safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
  m.recall = safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
  m.f1 = safe_div(2.0 * m.precision * m.recall, m.precision + m.recall);
  m.support = tp + fn;
  return m;
}

}  // namespace

ClassificationMetrics classification_metrics(const std::vector<bool>& preds, const std::vector<bool>& truths) {
  if (preds.empty()) throw DataError("classification metrics need at least one prediction");
  if (preds.size() != truths.size()) throw DataError("prediction and truth counts differ");
  ClassificationMetrics m;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] && truths[i]) ++m.tp;
    else if (!preds[i] && !truths[i]) ++m.tn;
    else if (preds[i]) ++m.fp;
    else ++m.fn;
  }
  m.ad = class_metrics(m.tp, m.fp, m.fn);
  m.non_ad = class_metrics(m.tn, m.fn, m.fp);
  m.accuracy = static_cast<double>(m.tp + m.tn) / static_cast<double>(preds.size());
  m.macro_f1 = 0.5 * (m.ad.f1 + m.non_ad.f1);
  return m;
}

RegressionMetrics regression_metrics(std::span<const double> preds, std::span<const double> truths) {
  if (preds.empty()) throw DataError("regression metrics need at least one prediction");
  if (preds.size() != truths.size()) throw DataError("prediction and truth counts differ");
  const auto n = static_cast<double>(preds.size());
  double sse = 0.0, mean_t = 0.0, mean_p = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    sse += (preds[i] - truths[i]) * (preds[i] - truths[i]);
    mean_t += truths[i];
    mean_p += preds[i];
  }
  mean_t /= n;
  mean_p /= n;
  RegressionMetrics r;
  r.rmse = std::sqrt(sse / n);
  double ss_tot = 0.0, ss_pred = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    ss_tot += (truths[i] - mean_t) * (truths[i] - mean_t);
    ss_pred += (preds[i] - mean_p) * (preds[i] - mean_p);
    cross += (truths[i] - mean_t) * (preds[i] - mean_p);
  }
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  if (preds.size() < 2 || ss_tot == 0.0) {
    r.r2 = nan;
    r.r2_pearson = nan;
    r.warning = preds.size() < 2 ? "r2 undefined for fewer than two samples"
                                 : "r2 undefined: ground-truth values are constant";
    return r;
  }
  r.r2 = 1.0 - sse / ss_tot;
  if (ss_pred == 0.0) {
    r.r2_pearson = nan;
    r.warning = "squared correlation undefined: predictions are constant";
  } else {
    r.r2_pearson = cross * cross / (ss_tot * ss_pred);
  }
  return r;
}

double median(std::vector<double> values) {
  if (values.empty()) throw DataError("median of empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

MemberOutput ensemble(std::span<const MemberOutput> members) {
  if (members.empty()) throw DataError("ensemble needs at least one member");
  std::size_t votes = 0;
  std::vector<double> mmse;
  mmse.reserve(members.size());
  for (const MemberOutput& m : members) {
    votes += m.ad ? 1 : 0;
    mmse.push_back(m.mmse);
  }
  return {2 * votes >= members.size(), median(std::move(mmse))};
}

std::string_view severity_name(SeverityClass c) {
  switch (c) {
    case SeverityClass::Normal: return "normal";
    case SeverityClass::Mild: return "mild";
    case SeverityClass::Moderate: return "moderate";
    case SeverityClass::Severe: return "severe";
  }
  return "?";
}

SeverityRange severity_range(SeverityClass c) {
  switch (c) {
    case SeverityClass::Normal: return {24, 30};
    case SeverityClass::Mild: return {19, 23};
    case SeverityClass::Moderate: return {10, 18};
    case SeverityClass::Severe: return {0, 9};
  }
  return {0, 0};
}

SeverityClass severity_class(double mmse) {
  if (!(mmse >= 0.0 && mmse <= 30.0)) {
    throw std::out_of_range("MMSE " + std::to_string(mmse) + " outside [0, 30]");
  }
  const int score = static_cast<int>(std::floor(mmse + 0.5));
  if (score >= 24) return SeverityClass::Normal;
  if (score >= 19) return SeverityClass::Mild;
  if (score >= 10) return SeverityClass::Moderate;
  return SeverityClass::Severe;
}

SeverityReport severity_report(std::span<const double> preds, std::span<const double> truths) {
  if (preds.empty()) throw DataError("severity report needs at least one prediction");
  if (preds.size() != truths.size()) throw DataError("prediction and truth counts differ");
  SeverityReport rep;
  rep.preds.assign(preds.begin(), preds.end());
  rep.truths.assign(truths.begin(), truths.end());
  std::size_t agree = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (severity_class(preds[i]) == severity_class(truths[i])) ++agree;
  }
  rep.agreement = static_cast<double>(agree) / static_cast<double>(preds.size());

  // Plot area: 400×400 px for MMSE 0..30 on both axes, origin bottom-left.
  constexpr double kMargin = 60.0, kSize = 400.0;
  auto px = [&](double mmse) { return kMargin + mmse / 30.0 * kSize; };
  auto py = [&](double mmse) { return kMargin + kSize - mmse / 30.0 * kSize; };
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * kMargin + kSize << "\" height=\""
     << 2 * kMargin + kSize << "\">\n";
  os << "  <rect x=\"0\" y=\"0\" width=\"" << 2 * kMargin + kSize << "\" height=\"" << 2 * kMargin + kSize
     << "\" fill=\"white\"/>\n";
  const char* shades[] = {"#e8f4e8", "#fff4d6", "#fde2cc", "#f8d0d0"};
  const SeverityClass classes[] = {SeverityClass::Normal, SeverityClass::Mild, SeverityClass::Moderate,
                                   SeverityClass::Severe};
  for (int i = 0; i < 4; ++i) {
    const SeverityRange r = severity_range(classes[i]);
    // Continuous extent of the bucket after half-up rounding.
    const double lo = std::max(0.0, r.lo - 0.5), hi = std::min(30.0, r.hi + 0.5);
    os << "  <rect class=\"severity-" << severity_name(classes[i]) << "\" x=\"" << px(lo) << "\" y=\""
       << py(hi) << "\" width=\"" << px(hi) - px(lo) << "\" height=\"" << py(lo) - py(hi) << "\" fill=\""
       << shades[i] << "\"/>\n";
  }
  os << "  <rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kSize << "\" height=\"" << kSize
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "  <line class=\"identity\" x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(30)
     << "\" y2=\"" << py(30) << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  for (int tick = 0; tick <= 30; tick += 5) {
    os << "  <text x=\"" << px(tick) << "\" y=\"" << kMargin + kSize + 18
       << "\" font-size=\"11\" text-anchor=\"middle\">" << tick << "</text>\n";
    os << "  <text x=\"" << kMargin - 8 << "\" y=\"" << py(tick) + 4
       << "\" font-size=\"11\" text-anchor=\"end\">" << tick << "</text>\n";
  }
  os << "  <text x=\"" << kMargin + kSize / 2 << "\" y=\"" << kMargin + kSize + 40
     << "\" font-size=\"13\" text-anchor=\"middle\">ground-truth MMSE</text>\n";
  os << "  <text x=\"18\" y=\"" << kMargin + kSize / 2 << "\" font-size=\"13\" text-anchor=\"middle\" "
     << "transform=\"rotate(-90 18 " << kMargin + kSize / 2 << ")\">predicted MMSE</text>\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    os << "  <circle class=\"point\" cx=\"" << px(truths[i]) << "\" cy=\"" << py(preds[i])
       << "\" r=\"3\" fill=\"#1f4e9a\" fill-opacity=\"0.75\"/>\n";
  }
  os << "  <text x=\"" << kMargin + kSize / 2 << "\" y=\"" << kMargin - 20
     << "\" font-size=\"14\" text-anchor=\"middle\">same severity class: " << 100.0 * rep.agreement
     << "% (n=" << preds.size() << ")</text>\n";
  os << "</svg>\n";
  rep.svg = os.str();
  return rep;
}

}  // namespace adcrnn
