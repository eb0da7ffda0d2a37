#pragma once

#include <cstdint>
#include <vector>

namespace dtcell::env {

/// Per-user MDP state: current SINRs, the previous slot's loads and the
/// user's previous association (all zeros for a fresh arrival).
struct Observation {
  std::vector<double> sinr;        // linear, |B|
  std::vector<double> prev_loads;  // user counts, |B|
  std::vector<double> prev_assoc;  // one-hot or all-zero, |B|

  std::size_t num_bs() const { return sinr.size(); }
  /// Concatenation (sinr, prev_loads, prev_assoc); length 3|B|.
  std::vector<double> flatten() const;
  friend bool operator==(const Observation&, const Observation&) = default;
};

/// `previous_bs` < 0 yields an all-zero association vector.
Observation compose_observation(std::vector<double> sinr, const std::vector<int>& prev_loads, int previous_bs);

/// One agent decision and its consequences.
struct TransitionSample {
  std::uint64_t user_id = 0;
  Observation observation;
  int action = 0;
  Observation next_observation;
  double reward = 0.0;
  double log_prob = 0.0;
  double value = 0.0;
  bool done = false;
};

}  // namespace dtcell::env
