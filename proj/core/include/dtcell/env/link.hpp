#pragma once

#include <span>
#include <vector>

#include "dtcell/common/rng.hpp"
#include "dtcell/radio/scenario.hpp"

namespace dtcell::env {

/// Service rates are floored here before any logarithm is taken.
inline constexpr double kRateFloor = 1.0;  // bits/s

/// Per-BS SINR for one user. `rx_power[j]` is P_j * g_ij (mW), `noise[j]` is
/// W_j * sigma^2 (mW), and interference is summed over other BSs sharing `band[j]`.
std::vector<double> sinr_vector(std::span<const double> rx_power, std::span<const int> band,
                                std::span<const double> noise);

/// W * log2(1 + sinr).
double achievable_rate(double sinr, double bandwidth);

/// Handover interruption for one association decision. `previous` < 0 marks
/// a user without a prior association, which is never charged.
double sample_handover(int previous, int next, const radio::HandoverModel& model, Rng& rng);

/// (c / load) * (1 - t_ho / t_s). Throws ContractViolation for load < 1.
double service_rate(double achievable, int load, double t_ho, double t_s);

/// log10(max(rate, kRateFloor)).
double utility(double rate);

/// alpha * own + (1 - alpha) / n_bs * sum(all).
double reward(double own_utility, std::span<const double> all_utilities, double alpha, int n_bs);

}  // namespace dtcell::env
