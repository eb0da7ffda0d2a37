#include "dtcell/eval/evaluate.hpp"

#include <limits>
#include <nlohmann/json.hpp>

#include "dtcell/common/error.hpp"
#include "dtcell/common/rng.hpp"
#include "dtcell/env/link.hpp"
#include "dtcell/eval/rate_metrics.hpp"

namespace dtcell::eval {

namespace {

constexpr std::uint64_t kHeldOutStream = 0xE70000;

}  // namespace

std::vector<int> MaxSinrPolicy::decide(const env::NetworkEnv& env) {
  std::vector<int> actions;
  actions.reserve(env.user_count());
  for (const auto& o : env.observations()) actions.push_back(max_sinr_policy(o.sinr));
  return actions;
}

LearnedPolicy::LearnedPolicy(agent::PolicyParameters params, int top_n, bool greedy, std::uint64_t seed)
    : params_(std::move(params)), top_n_(top_n), greedy_(greedy), rng_(seed) {}

std::vector<int> LearnedPolicy::decide(const env::NetworkEnv& env) {
  pending_ids_ = env.user_ids();
  pending_.assign(pending_ids_.size(), {});
  for (std::size_t i = 0; i < pending_ids_.size(); ++i) {
    const auto it = memory_.find(pending_ids_[i]);
    pending_[i] = it != memory_.end() ? it->second : agent::AgentMemory::zeros(params_.shape().hidden);
  }
  const auto outputs = agent::forward_batch(env.observations(), pending_, top_n_, params_);
  std::vector<int> actions(outputs.size());
  for (std::size_t i = 0; i < outputs.size(); ++i)
    actions[i] = greedy_ ? agent::greedy_action(outputs[i]).action : agent::sample_action(outputs[i], rng_).action;
  return actions;
}

void LearnedPolicy::observe(const env::StepResult& result) {
  if (result.samples.size() != pending_ids_.size()) throw ContractViolation("LearnedPolicy: step/decision mismatch");
  memory_.clear();
  for (std::size_t i = 0; i < pending_ids_.size(); ++i)
    if (!result.samples[i].done) memory_[pending_ids_[i]] = std::move(pending_[i]);
}

EvalReport make_report(std::vector<double> rates, std::size_t handovers) {
  if (rates.empty()) throw ContractViolation("make_report: no user slots were observed");
  EvalReport r;
  r.user_slots = rates.size();
  r.handovers = handovers;
  r.five_pct_rate = five_pct_rate(rates);
  r.utility = log_utility(rates);
  r.handover_per_user_slot = static_cast<double>(handovers) / static_cast<double>(rates.size());
  r.cdf = rate_cdf(rates);
  r.rates = std::move(rates);
  return r;
}

EvalReport evaluate_policy(AssociationPolicy& policy, env::NetworkEnv& env, int slots) {
  if (slots < 1) throw ContractViolation("evaluate_policy: slots must be positive");
  std::vector<double> rates;
  std::size_t handovers = 0;
  for (int t = 0; t < slots; ++t) {
    const auto actions = policy.decide(env);
    const auto result = env.step(actions);
    policy.observe(result);
    for (const auto& u : result.users) {
      rates.push_back(u.service_rate > env::kRateFloor ? u.service_rate : env::kRateFloor);
      handovers += u.handover ? 1 : 0;
    }
  }
  return make_report(std::move(rates), handovers);
}

EvalReport merge_reports(const std::vector<EvalReport>& reports) {
  std::vector<double> rates;
  std::size_t handovers = 0;
  for (const auto& r : reports) {
    rates.insert(rates.end(), r.rates.begin(), r.rates.end());
    handovers += r.handovers;
  }
  return make_report(std::move(rates), handovers);
}

EvalReport evaluate_held_out(const PolicyFactory& make_policy, std::shared_ptr<const radio::ScenarioConfig> scenario,
                             std::shared_ptr<const radio::ChannelModel> channel,
                             std::shared_ptr<const mobility::MobilitySource> mobility,
                             std::span<const int> user_counts, int slots, std::uint64_t seed,
                             const env::EnvOptions& options) {
  if (user_counts.empty()) throw ConfigError("evaluation needs at least one user count");
  std::vector<EvalReport> reports;
  for (int users : user_counts) {
    env::NetworkEnv e(scenario, channel, mobility, options);
    e.reset(derive_seed(seed, kHeldOutStream + static_cast<std::uint64_t>(users)), users);
    const auto policy = make_policy();
    reports.push_back(evaluate_policy(*policy, e, slots));
  }
  return merge_reports(reports);
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json cdf = nlohmann::json::array();
  for (const auto& [rate, p] : report.cdf) cdf.push_back({rate, p});
  nlohmann::json j = {{"five_pct_rate", report.five_pct_rate},
                      {"utility", report.utility},
                      {"handover_per_user_slot", report.handover_per_user_slot},
                      {"cdf", cdf}};
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("eval report: ") + e.what());
  }
  EvalReport r;
  try {
    r.five_pct_rate = j.at("five_pct_rate").get<double>();
    r.utility = j.at("utility").get<double>();
    r.handover_per_user_slot = j.at("handover_per_user_slot").get<double>();
    double last_p = -1.0, last_rate = -std::numeric_limits<double>::infinity();
    for (const auto& pt : j.at("cdf")) {
      if (!pt.is_array() || pt.size() != 2) throw ParseError("eval report: cdf entries must be [rate, p]");
      const double rate = pt[0].get<double>(), p = pt[1].get<double>();
      if (p < last_p || p < 0.0 || p > 1.0) throw ParseError("eval report: cdf must be non-decreasing in [0, 1]");
      if (rate < last_rate) throw ParseError("eval report: cdf rates must be non-decreasing");
      last_p = p;
      last_rate = rate;
      r.cdf.emplace_back(rate, p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("eval report: ") + e.what());
  }
  return r;
}

}  // namespace dtcell::eval
