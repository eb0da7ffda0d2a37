#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dtcell/agent/policy.hpp"
#include "dtcell/env/network_env.hpp"

namespace dtcell::eval {

/// An association rule driven slot by slot.
class AssociationPolicy {
 public:
  virtual ~AssociationPolicy() = default;
  /// One BS index per active user, in env.observations() order.
  virtual std::vector<int> decide(const env::NetworkEnv& env) = 0;
  /// Sees the outcome of the slot just decided.
  virtual void observe(const env::StepResult&) {}
};

class MaxSinrPolicy final : public AssociationPolicy {
 public:
  std::vector<int> decide(const env::NetworkEnv& env) override;
};

/// Trained actor with per-user recurrent memory. Greedy mode takes the most
/// probable action; otherwise actions are sampled from `seed`.
class LearnedPolicy final : public AssociationPolicy {
 public:
  LearnedPolicy(agent::PolicyParameters params, int top_n, bool greedy = true, std::uint64_t seed = 0);
  std::vector<int> decide(const env::NetworkEnv& env) override;
  void observe(const env::StepResult& result) override;

 private:
  agent::PolicyParameters params_;
  int top_n_;
  bool greedy_;
  Rng rng_;
  std::map<std::uint64_t, agent::AgentMemory> memory_;
  std::vector<std::uint64_t> pending_ids_;
  std::vector<agent::AgentMemory> pending_;
};

struct EvalReport {
  double five_pct_rate = 0.0;           // bits/s
  double utility = 0.0;                 // mean log10 rate
  double handover_per_user_slot = 0.0;
  std::vector<std::pair<double, double>> cdf;  // (rate, p)
  std::vector<double> rates;            // one per (user, slot); not serialized
  std::size_t user_slots = 0;
  std::size_t handovers = 0;
};

/// Report over a pooled list of per-(user, slot) rates and handover count.
EvalReport make_report(std::vector<double> rates, std::size_t handovers);

/// Drives `env` for `slots` slots under `policy` and pools every user's
/// per-slot service rate.
EvalReport evaluate_policy(AssociationPolicy& policy, env::NetworkEnv& env, int slots);

/// Pools several runs (for example one per held-out density) into one report.
EvalReport merge_reports(const std::vector<EvalReport>& reports);

using PolicyFactory = std::function<std::unique_ptr<AssociationPolicy>()>;

/// One fresh environment and policy per user count, `slots` slots each,
/// pooled. Environment seeds derive from `seed` and the count, so the same
/// call always replays the same traffic.
EvalReport evaluate_held_out(const PolicyFactory& make_policy, std::shared_ptr<const radio::ScenarioConfig> scenario,
                             std::shared_ptr<const radio::ChannelModel> channel,
                             std::shared_ptr<const mobility::MobilitySource> mobility,
                             std::span<const int> user_counts, int slots, std::uint64_t seed,
                             const env::EnvOptions& options = {});

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

}  // namespace dtcell::eval
