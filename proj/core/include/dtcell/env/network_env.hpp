#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "dtcell/common/binary_io.hpp"
#include "dtcell/common/rng.hpp"
#include "dtcell/env/observation.hpp"
#include "dtcell/mobility/mobility_source.hpp"
#include "dtcell/mobility/population.hpp"
#include "dtcell/radio/channel.hpp"
#include "dtcell/radio/scenario.hpp"

namespace dtcell::env {

struct EnvOptions {
  /// Relative gain disturbance applied independently to every (user, BS)
  /// link each slot; 0.05 models a +-5% mismatch between twin and network.
  double channel_disturbance = 0.0;
  /// Poisson arrivals per slot. Negative: derived so that the steady-state
  /// population equals the count passed to reset().
  double arrival_rate = -1.0;
};

/// Per-user accounting for one slot, alongside the transition sample.
struct UserSlot {
  std::uint64_t user_id = 0;
  int serving_bs = 0;
  bool handover = false;
  double t_ho = 0.0;
  double sinr_serving = 0.0;
  int load_serving = 0;
  double service_rate = 0.0;
  double utility = 0.0;
};

struct StepResult {
  std::vector<TransitionSample> samples;  // one per user active at the start of the slot
  std::vector<UserSlot> users;            // aligned with samples
  std::vector<int> loads;                 // l[n]
  double network_utility = 0.0;           // mean log10 service rate over users
  std::int64_t slot = 0;                  // slot the actions applied to
  mobility::PopulationChange population;
};

/// The association MDP over an evolving user population. Single owner; all
/// randomness comes from per-environment generators seeded by reset().
class NetworkEnv {
 public:
  NetworkEnv(std::shared_ptr<const radio::ScenarioConfig> scenario, std::shared_ptr<const radio::ChannelModel> channel,
             std::shared_ptr<const mobility::MobilitySource> mobility, EnvOptions options = {});

  /// Fresh generators from `seed`, `initial_user_count` users, and a
  /// Max-SINR initial association that defines l[-1] and x[-1].
  void reset(std::uint64_t seed, int initial_user_count);

  /// Observations for the users active now, ordered by user id.
  const std::vector<Observation>& observations() const { return observations_; }
  const std::vector<std::uint64_t>& user_ids() const { return user_ids_; }
  std::size_t user_count() const { return user_ids_.size(); }
  int num_bs() const { return num_bs_; }
  std::int64_t slot() const { return slot_; }
  const std::vector<int>& previous_loads() const { return prev_loads_; }
  const mobility::PopulationProcess& population() const { return population_; }
  const radio::ScenarioConfig& scenario() const { return *scenario_; }

  /// Applies one action per active user (in observation order), then
  /// advances mobility by one slot. Throws ContractViolation on a count
  /// mismatch or an out-of-range action.
  StepResult step(std::span<const int> actions);

  void serialize(BinaryWriter& out) const;
  void deserialize(BinaryReader& in);

 private:
  void refresh_observations();
  std::vector<double> measure_sinr(Vec2 position);

  std::shared_ptr<const radio::ScenarioConfig> scenario_;
  std::shared_ptr<const radio::ChannelModel> channel_;
  std::shared_ptr<const mobility::MobilitySource> mobility_;
  EnvOptions options_;
  int num_bs_;
  std::vector<double> tx_mw_;
  std::vector<double> noise_mw_;
  std::vector<int> band_;
  std::vector<double> bandwidth_;

  std::int64_t slot_ = 0;
  mobility::PopulationProcess population_;
  std::vector<std::uint64_t> user_ids_;
  std::vector<int> serving_;  // previous association per user, -1 for fresh arrivals
  std::vector<int> prev_loads_;
  std::vector<Observation> observations_;
  Rng mobility_rng_;
  Rng handover_rng_;
  Rng channel_rng_;
};

/// JSON-lines audit log of per-user decisions.
void write_sample_log(std::ostream& out, const StepResult& result);

}  // namespace dtcell::env
