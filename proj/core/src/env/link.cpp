#include "dtcell/env/link.hpp"

#include <cmath>

#include "dtcell/common/error.hpp"

namespace dtcell::env {

std::vector<double> sinr_vector(std::span<const double> rx_power, std::span<const int> band,
                                std::span<const double> noise) {
  const std::size_t n = rx_power.size();
  if (band.size() != n || noise.size() != n) throw ContractViolation("sinr_vector: size mismatch");
  std::vector<double> sinr(n);
  for (std::size_t j = 0; j < n; ++j) {
    double interference = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      if (k != j && band[k] == band[j]) interference += rx_power[k];
    sinr[j] = rx_power[j] / (interference + noise[j]);
  }
  return sinr;
}

double achievable_rate(double sinr, double bandwidth) {
  if (!(sinr >= 0.0)) throw ContractViolation("achievable_rate: negative SINR");
  return bandwidth * std::log2(1.0 + sinr);
}

double sample_handover(int previous, int next, const radio::HandoverModel& model, Rng& rng) {
  if (previous < 0 || previous == next) return 0.0;
  return uniform(rng, 0.0, 1.0) < model.success_probability ? model.success_interruption : model.failure_interruption;
}

double service_rate(double achievable, int load, double t_ho, double t_s) {
  if (load < 1) throw ContractViolation("service_rate: a served user implies load >= 1");
  if (!(t_ho >= 0.0 && t_ho < t_s)) throw ContractViolation("service_rate: interruption must lie in [0, t_s)");
  return (achievable / load) * (1.0 - t_ho / t_s);
}

double utility(double rate) { return std::log10(rate > kRateFloor ? rate : kRateFloor); }

double reward(double own_utility, std::span<const double> all_utilities, double alpha, int n_bs) {
  double total = 0.0;
  for (double u : all_utilities) total += u;
  return alpha * own_utility + (1.0 - alpha) / n_bs * total;
}

}  // namespace dtcell::env
