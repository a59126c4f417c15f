// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adcrnn {

struct ClassMetrics {
  double precision = 0.0;  // 0 when the class is never predicted
  double recall = 0.0;     // 0 when the class never occurs
  double f1 = 0.0;
  std::size_t support = 0;
};

struct ClassificationMetrics {
  ClassMetrics non_ad;
  ClassMetrics ad;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;  // AD is the positive class
};

/// Confusion-matrix metrics for AD (true) vs non-AD (false), per class.
ClassificationMetrics classification_metrics(const std::vector<bool>& preds, const std::vector<bool>& truths);

struct RegressionMetrics {
  double rmse = 0.0;
  double r2 = 0.0;          // coefficient of determination, 1 - SS_res / SS_tot
  double r2_pearson = 0.0;  // squared Pearson correlation
  std::optional<std::string> warning;
};

/// RMSE over >= 1 pairs. Both r² variants are NaN (with a warning) when the
/// truths are constant or fewer than two pairs are given.
RegressionMetrics regression_metrics(std::span<const double> preds, std::span<const double> truths);

// ---- ensembling -------------------------------------------------------------

struct MemberOutput {
  bool ad = false;
  double mmse = 0.0;
};

/// Even count: mean of the two middle values.
double median(std::vector<double> values);

/// Majority vote for AD (an even split resolves to AD) and median MMSE.
MemberOutput ensemble(std::span<const MemberOutput> members);

// ---- severity ---------------------------------------------------------------

enum class SeverityClass { Normal, Mild, Moderate, Severe };

std::string_view severity_name(SeverityClass c);

/// Inclusive integer MMSE range of a class: Normal 24-30, Mild 19-23,
/// Moderate 10-18, Severe 0-9.
struct SeverityRange {
  int lo;
  int hi;
};
SeverityRange severity_range(SeverityClass c);

/// Rounds half-up to an integer score, then buckets. Throws
/// std::out_of_range outside [0, 30].
SeverityClass severity_class(double mmse);

struct SeverityReport {
  std::vector<double> preds;
  std::vector<double> truths;
  double agreement = 0.0;  // fraction of pairs in the same class
  std::string svg;
};

/// Scatter of predicted vs true MMSE with the identity line and shaded
/// class regions, plus the same-class agreement rate.
SeverityReport severity_report(std::span<const double> preds, std::span<const double> truths);

}  // namespace adcrnn
