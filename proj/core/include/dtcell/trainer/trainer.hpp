#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dtcell/agent/policy.hpp"
#include "dtcell/agent/ppo.hpp"
#include "dtcell/env/network_env.hpp"
#include "dtcell/mobility/mobility_source.hpp"
#include "dtcell/radio/channel.hpp"
#include "dtcell/radio/scenario.hpp"

namespace dtcell::trainer {

struct TrainerConfig {
  int parallel_envs = 1;
  /// Initial user count per environment; empty spreads them evenly over the
  /// scenario's user_count_range.
  std::vector<int> initial_user_counts;
  int rollout_length = 64;
  std::int64_t sample_budget = 5'000'000;
  int checkpoint_interval = 0;  // rounds between checkpoints; 0 disables files
  std::string checkpoint_dir;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: resolve_worker_threads()
  int hidden = 128;
  agent::PpoHyper ppo;
  env::EnvOptions env_options;
  int max_nonfinite_rounds = 3;
  int max_consecutive_faults = 3;
};

/// Desk-scale training settings: a 2e5-sample budget with short rollouts and
/// a larger step size so the small budget still converges.
TrainerConfig desk_trainer_config();

/// Throws ConfigError for K < 1, non-positive budget or rollout length, or a
/// count list whose size differs from K.
void validate(const TrainerConfig& config);

/// K evenly spaced counts over [min, max] with inclusive endpoints; K = 1
/// gives the midpoint. Counts are rounded to the nearest integer.
std::vector<int> spread_user_counts(const radio::CountRange& range, int k);

/// Environment steps per environment that consume `budget` samples when K
/// environments each hold `mean_users` users: budget / (K * mean_users).
double steps_for_budget(std::int64_t budget, int k, double mean_users);

/// `requested` if positive, otherwise the hardware concurrency; always
/// capped by DT_CELLSIM_THREADS when that variable holds a positive integer.
int resolve_worker_threads(int requested);

/// One digital-twin environment plus the state its agents carry across slots.
struct EnvWorker {
  env::NetworkEnv env;
  Rng policy_rng;
  std::map<std::uint64_t, agent::AgentMemory> memory;
  int initial_users = 0;
};

/// Builds K environments with independent seed streams derived from `seed`
/// and resets each to its initial user count.
std::vector<EnvWorker> spawn_envs(std::shared_ptr<const radio::ScenarioConfig> scenario,
                                  std::shared_ptr<const radio::ChannelModel> channel,
                                  std::shared_ptr<const mobility::MobilitySource> mobility,
                                  const std::vector<int>& initial_counts, std::uint64_t seed,
                                  const env::EnvOptions& options = {});

struct BufferedStep {
  std::vector<double> features;
  agent::ActionMask mask;
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;
  bool done = false;
  int user_count = 0;  // |U| of the environment at this step
};

/// One user's consecutive decisions within a round.
struct UserRollout {
  int env_index = 0;
  std::uint64_t user_id = 0;
  std::vector<BufferedStep> steps;
  /// Recurrent state before steps[i * sequence_length].
  std::vector<agent::AgentMemory> chunk_initial;
  double bootstrap_value = 0.0;  // critic value after the last step when not done
};

struct SampleBuffer {
  std::vector<UserRollout> rollouts;  // env order, then first appearance
  std::vector<double> env_step_utility;  // network utility per (env, slot)
  int sequence_length = 16;

  std::size_t size() const;
  /// |U| seen by every sample, in buffer order.
  std::vector<int> sample_user_counts() const;
  double mean_reward() const;
  double mean_utility() const;
  friend bool operator==(const SampleBuffer&, const SampleBuffer&);
};

/// Called before every environment step with (env index, slot); throwing
/// from it simulates an environment fault.
using StepHook = std::function<void(int, std::int64_t)>;

/// Advances every environment `rollout_length` slots under one parameter
/// snapshot. Environments run on up to `threads` workers; results are
/// aggregated in environment order so the buffer is independent of
/// scheduling. The first exception raised by any environment is rethrown.
SampleBuffer collect_round(std::vector<EnvWorker>& workers, const agent::PolicyParameters& params,
                           int rollout_length, int top_n, int sequence_length, int threads,
                           const StepHook& hook = {});

/// GAE per user rollout, cut into sequence_length chunks for the update.
std::vector<agent::Segment> build_segments(const SampleBuffer& buffer, double gamma, double lambda);

struct CurvePoint {
  int round = 0;
  std::int64_t samples_seen = 0;
  double mean_utility = 0.0;  // network utility averaged per environment step
  double mean_reward = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
};

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve);
void save_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve);

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

/// Final policy weights stored inside a trainer checkpoint.
agent::PolicyParameters params_from_checkpoint(const std::string& bytes);

/// Parallel digital-twin PPO training under a fixed sample budget.
class Trainer {
 public:
  Trainer(TrainerConfig config, std::shared_ptr<const radio::ScenarioConfig> scenario,
          std::shared_ptr<const mobility::MobilitySource> mobility);

  const TrainerConfig& config() const { return config_; }
  const agent::PolicyParameters& params() const { return params_; }
  const std::vector<CurvePoint>& curve() const { return curve_; }
  const std::vector<EnvWorker>& workers() const { return workers_; }
  std::int64_t samples_seen() const { return samples_seen_; }
  int round() const { return round_; }
  bool finished() const { return samples_seen_ >= config_.sample_budget; }
  /// Checkpoint files written so far.
  const std::vector<std::string>& checkpoint_paths() const { return checkpoint_paths_; }

  void set_step_hook(StepHook hook) { hook_ = std::move(hook); }
  /// Receives one JSON object per update.
  void set_stats_stream(std::ostream* out) { stats_ = out; }

  /// Collects one round without updating (exposed for inspection).
  SampleBuffer collect();
  /// collect + ppo_update + bookkeeping. An environment fault restores the
  /// last checkpoint and returns without advancing; repeated faults or
  /// repeated non-finite updates raise.
  CurvePoint run_round();
  /// Runs rounds until the budget is consumed.
  void run(const std::function<void(const CurvePoint&)>& on_round = {});

  std::string checkpoint_bytes() const;
  /// Throws ParseError on damaged or mismatched data, leaving state intact.
  void restore_bytes(const std::string& bytes);
  void save_checkpoint(const std::string& path) const;
  void restore_checkpoint(const std::string& path);

 private:
  TrainerConfig config_;
  std::shared_ptr<const radio::ScenarioConfig> scenario_;
  std::shared_ptr<const radio::ChannelModel> channel_;
  std::shared_ptr<const mobility::MobilitySource> mobility_;
  std::vector<EnvWorker> workers_;
  agent::PolicyParameters params_;
  agent::AdamState adam_;
  Rng update_rng_;
  std::vector<CurvePoint> curve_;
  std::int64_t samples_seen_ = 0;
  int round_ = 0;
  int nonfinite_rounds_ = 0;
  int consecutive_faults_ = 0;
  int threads_ = 1;
  std::string last_checkpoint_;
  std::vector<std::string> checkpoint_paths_;
  StepHook hook_;
  std::ostream* stats_ = nullptr;
};

}  // namespace dtcell::trainer
