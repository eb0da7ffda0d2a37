#pragma once

#include <span>
#include <utility>
#include <vector>

namespace dtcell::eval {

/// Index of the largest SINR, lowest index on ties. Throws ContractViolation
/// on an empty vector.
int max_sinr_policy(std::span<const double> sinr);

/// Empirical quantile with linear interpolation between order statistics:
/// position h = (n - 1) * q over the sorted sample.
double quantile(std::span<const double> values, double q);

/// 5th percentile of the rate sample under the quantile() convention.
double five_pct_rate(std::span<const double> rates);

/// Mean of log10(rate). Throws ContractViolation on a non-positive rate.
double log_utility(std::span<const double> rates);

/// `points` (rate, p) pairs with p = k / (points - 1), k = 0..points-1.
std::vector<std::pair<double, double>> rate_cdf(std::span<const double> rates, int points = 1000);

}  // namespace dtcell::eval
