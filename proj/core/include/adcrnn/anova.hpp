// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "adcrnn/datamodel.hpp"

namespace adcrnn {

struct AnovaResult {
  double f = 0.0;
  double p = 1.0;
};

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double a, double b, double x);

/// P(F > f) for an F(df1, df2) variate.
double f_survival(double f, double df1, double df2);

/// One-way ANOVA across groups. Needs >= 2 groups, each non-empty, and
/// more observations than groups.
///
/// Degenerate cases: zero between-group spread gives F = 0, p = 1 (this
/// includes all-identical values); zero within-group spread with nonzero
/// between-group spread gives F = +inf, p = 0.
AnovaResult anova_f(const std::vector<std::vector<double>>& groups);

struct SelectionResult {
  std::vector<std::size_t> kept_indices;  // ascending
  std::vector<double> f_values;
  std::vector<double> p_values;
  double alpha = 0.05;

  /// One flag per column, true where kept.
  std::vector<bool> mask() const;
};

/// Per-column ANOVA grouping rows by label; keeps columns with p <= alpha.
/// alpha must lie in (0, 1]. Throws DataError if fewer than two classes occur.
SelectionResult select_features(const FeatureMatrix& m, std::span<const int> labels, double alpha);
SelectionResult select_features(const FeatureMatrix& m, double alpha);

}  // namespace adcrnn
