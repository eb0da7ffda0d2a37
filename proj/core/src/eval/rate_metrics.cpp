#include "dtcell/eval/rate_metrics.hpp"

#include <algorithm>
#include <cmath>

#include "dtcell/common/error.hpp"

namespace dtcell::eval {

int max_sinr_policy(std::span<const double> sinr) {
  if (sinr.empty()) throw ContractViolation("max_sinr_policy: empty SINR vector");
  int best = 0;
  for (std::size_t k = 1; k < sinr.size(); ++k)
    if (sinr[k] > sinr[best]) best = static_cast<int>(k);
  return best;
}

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw ContractViolation("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw ContractViolation("quantile: q must lie in [0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double five_pct_rate(std::span<const double> rates) { return quantile(rates, 0.05); }

double log_utility(std::span<const double> rates) {
  if (rates.empty()) throw ContractViolation("log_utility: empty sample");
  double sum = 0.0;
  for (double r : rates) {
    if (!(r > 0.0)) throw ContractViolation("log_utility: rates must be positive");
    sum += std::log10(r);
  }
  return sum / static_cast<double>(rates.size());
}

std::vector<std::pair<double, double>> rate_cdf(std::span<const double> rates, int points) {
  if (rates.empty()) throw ContractViolation("rate_cdf: empty sample");
  if (points < 2) throw ContractViolation("rate_cdf: at least two points are required");
  std::vector<double> sorted(rates.begin(), rates.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> cdf(points);
  const double n1 = static_cast<double>(sorted.size()) - 1.0;
  for (int k = 0; k < points; ++k) {
    const double p = static_cast<double>(k) / (points - 1);
    const double h = n1 * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    cdf[k] = {sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]), p};
  }
  return cdf;
}

}  // namespace dtcell::eval
