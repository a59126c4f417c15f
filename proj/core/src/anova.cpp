// SPDX-License-Identifier: Apache-2.0
#include "adcrnn/anova.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "adcrnn/error.hpp"

namespace adcrnn {
namespace {

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double f_survival(double f, double df1, double df2) {
  if (std::isinf(f)) return 0.0;
  if (f <= 0.0) return 1.0;
  return regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * f));
}

AnovaResult anova_f(const std::vector<std::vector<double>>& groups) {
  const std::size_t k = groups.size();
  if (k < 2) throw DataError("anova needs at least 2 groups");
  std::size_t n = 0;
  double total = 0.0;
  for (const auto& g : groups) {
    if (g.empty()) throw DataError("anova group is empty");
    n += g.size();
    for (double v : g) total += v;
  }
  if (n <= k) throw DataError("anova needs more observations than groups");
  const double grand = total / static_cast<double>(n);

  double ssb = 0.0, ssw = 0.0;
  for (const auto& g : groups) {
    double s = 0.0;
    for (double v : g) s += v;
    const double mean = s / static_cast<double>(g.size());
    ssb += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
    for (double v : g) ssw += (v - mean) * (v - mean);
  }
  const double sst = ssb + ssw;
  if (ssb <= 0.0 || sst <= 0.0) return {0.0, 1.0};
  // Rounding can leave ~1e-30 of within-group spread where it is exactly zero.
  if (ssw <= 1e-14 * sst) return {std::numeric_limits<double>::infinity(), 0.0};

  const double df_between = static_cast<double>(k - 1);
  const double df_within = static_cast<double>(n - k);
  const double f = (ssb / df_between) / (ssw / df_within);
  return {f, f_survival(f, df_between, df_within)};
}

std::vector<bool> SelectionResult::mask() const {
  std::vector<bool> m(p_values.size(), false);
  for (std::size_t j : kept_indices) m[j] = true;
  return m;
}

SelectionResult select_features(const FeatureMatrix& m, std::span<const int> labels, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (labels.size() != m.rows.size()) {
    throw DataError("labels length " + std::to_string(labels.size()) + " != rows " +
                    std::to_string(m.rows.size()));
  }
  for (std::size_t r = 0; r < m.rows.size(); ++r) {
    if (m.rows[r].size() != m.cols()) throw DataError("ragged feature matrix at row " + std::to_string(r));
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t r = 0; r < labels.size(); ++r) by_class[labels[r]].push_back(r);
  if (by_class.size() < 2) throw DataError("feature selection needs at least two classes");

  SelectionResult res;
  res.alpha = alpha;
  res.f_values.resize(m.cols());
  res.p_values.resize(m.cols());
  std::vector<std::vector<double>> groups(by_class.size());
  for (std::size_t j = 0; j < m.cols(); ++j) {
    std::size_t gi = 0;
    for (const auto& [label, rows] : by_class) {
      auto& g = groups[gi++];
      g.clear();
      for (std::size_t r : rows) g.push_back(m.rows[r][j]);
    }
    const AnovaResult a = anova_f(groups);
    res.f_values[j] = a.f;
    res.p_values[j] = a.p;
    if (a.p <= alpha) res.kept_indices.push_back(j);
  }
  return res;
}

SelectionResult select_features(const FeatureMatrix& m, double alpha) {
  return select_features(m, m.labels, alpha);
}

}  // namespace adcrnn
