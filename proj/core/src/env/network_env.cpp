#include "dtcell/env/network_env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "dtcell/common/error.hpp"
#include "dtcell/env/link.hpp"

namespace dtcell::env {

namespace {

enum Stream : std::uint64_t { kMobilityStream = 11, kHandoverStream = 12, kChannelStream = 13 };

int argmax_lowest(const std::vector<double>& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

NetworkEnv::NetworkEnv(std::shared_ptr<const radio::ScenarioConfig> scenario,
                       std::shared_ptr<const radio::ChannelModel> channel,
                       std::shared_ptr<const mobility::MobilitySource> mobility, EnvOptions options)
    : scenario_(std::move(scenario)),
      channel_(std::move(channel)),
      mobility_(std::move(mobility)),
      options_(options),
      num_bs_(channel_->num_base_stations()) {
  if (!(options_.channel_disturbance >= 0.0 && options_.channel_disturbance < 1.0))
    throw ConfigError("env: channel_disturbance must lie in [0, 1)");
  if (num_bs_ != scenario_->num_base_stations()) throw ConfigError("env: channel and scenario disagree on |B|");
  const double noise_psd = channel_->noise_psd_mw_per_hz();
  for (const auto& bs : channel_->base_stations()) {
    tx_mw_.push_back(radio::dbm_to_mw(bs.tx_power));
    noise_mw_.push_back(bs.band.bandwidth * noise_psd);
    band_.push_back(bs.band_index);
    bandwidth_.push_back(bs.band.bandwidth);
  }
  prev_loads_.assign(num_bs_, 0);
}

std::vector<double> NetworkEnv::measure_sinr(Vec2 position) {
  std::vector<double> rx(num_bs_);
  for (int j = 0; j < num_bs_; ++j) {
    double g = channel_->channel_gain(position, j);
    if (options_.channel_disturbance > 0.0) g = radio::perturb_gain(g, options_.channel_disturbance, channel_rng_);
    rx[j] = tx_mw_[j] * g;
  }
  return sinr_vector(rx, band_, noise_mw_);
}

void NetworkEnv::refresh_observations() {
  observations_.clear();
  observations_.reserve(population_.size());
  for (std::size_t i = 0; i < population_.size(); ++i)
    observations_.push_back(compose_observation(measure_sinr(population_.users()[i].position), prev_loads_, serving_[i]));
}

void NetworkEnv::reset(std::uint64_t seed, int initial_user_count) {
  const auto range = scenario_->user_count_range;
  if (initial_user_count < range.min || initial_user_count > range.max)
    throw ConfigError("env reset: initial user count outside user_count_range");
  mobility_rng_ = make_rng(seed, kMobilityStream);
  handover_rng_ = make_rng(seed, kHandoverStream);
  channel_rng_ = make_rng(seed, kChannelStream);
  slot_ = 0;

  double rate = options_.arrival_rate;
  if (rate < 0.0) {
    const double lifetime_slots = mobility_->mean_duration() / scenario_->slot_duration;
    rate = lifetime_slots > 0.0 ? initial_user_count / lifetime_slots : 0.0;
  }
  population_ = mobility::PopulationProcess(rate, range, scenario_->slot_duration);
  population_.initialize(initial_user_count, slot_, *mobility_, mobility_rng_);

  user_ids_.clear();
  serving_.clear();
  prev_loads_.assign(num_bs_, 0);
  std::vector<std::vector<double>> sinrs;
  for (const auto& u : population_.users()) {
    user_ids_.push_back(u.id);
    sinrs.push_back(measure_sinr(u.position));
    const int best = argmax_lowest(sinrs.back());
    serving_.push_back(best);
    ++prev_loads_[best];
  }
  observations_.clear();
  for (std::size_t i = 0; i < sinrs.size(); ++i)
    observations_.push_back(compose_observation(std::move(sinrs[i]), prev_loads_, serving_[i]));
}

StepResult NetworkEnv::step(std::span<const int> actions) {
  const std::size_t n = user_ids_.size();
  if (actions.size() != n)
    throw ContractViolation("env step: expected " + std::to_string(n) + " actions, got " + std::to_string(actions.size()));
  for (int a : actions)
    if (a < 0 || a >= num_bs_) throw ContractViolation("env step: action outside [0, |B|)");

  StepResult result;
  result.slot = slot_;
  result.loads.assign(num_bs_, 0);
  for (int a : actions) ++result.loads[a];

  const double t_s = scenario_->slot_duration;
  std::vector<double> utilities(n);
  result.users.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int j = actions[i];
    auto& u = result.users[i];
    u.user_id = user_ids_[i];
    u.serving_bs = j;
    u.handover = serving_[i] >= 0 && serving_[i] != j;
    u.t_ho = sample_handover(serving_[i], j, scenario_->handover, handover_rng_);
    u.sinr_serving = observations_[i].sinr[j];
    u.load_serving = result.loads[j];
    u.service_rate = service_rate(achievable_rate(u.sinr_serving, bandwidth_[j]), u.load_serving, u.t_ho, t_s);
    u.utility = utility(u.service_rate);
    utilities[i] = u.utility;
  }
  double total = 0.0;
  for (double v : utilities) total += v;
  result.network_utility = n ? total / static_cast<double>(n) : 0.0;

  // Advance one slot: departures and arrivals, then fresh measurements.
  std::vector<Observation> previous_obs = std::move(observations_);
  const std::vector<std::uint64_t> previous_ids = user_ids_;
  ++slot_;
  result.population = population_.step(slot_, *mobility_, mobility_rng_);
  prev_loads_ = result.loads;

  std::vector<int> serving;
  user_ids_.clear();
  std::size_t k = 0;
  for (const auto& u : population_.users()) {
    while (k < previous_ids.size() && previous_ids[k] < u.id) ++k;
    serving.push_back(k < previous_ids.size() && previous_ids[k] == u.id ? actions[k] : -1);
    user_ids_.push_back(u.id);
  }
  serving_ = std::move(serving);
  refresh_observations();

  result.samples.resize(n);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = result.samples[i];
    s.user_id = previous_ids[i];
    s.action = actions[i];
    s.reward = reward(utilities[i], utilities, scenario_->reward_alpha, num_bs_);
    while (next < user_ids_.size() && user_ids_[next] < s.user_id) ++next;
    if (next < user_ids_.size() && user_ids_[next] == s.user_id) {
      s.next_observation = observations_[next];
    } else {
      s.done = true;
      s.next_observation = compose_observation(previous_obs[i].sinr, prev_loads_, actions[i]);
    }
    s.observation = std::move(previous_obs[i]);
  }
  return result;
}

void NetworkEnv::serialize(BinaryWriter& out) const {
  out.put(slot_);
  population_.serialize(out);
  out.put_vector(user_ids_);
  out.put_vector(serving_);
  out.put_vector(prev_loads_);
  out.put<std::uint64_t>(observations_.size());
  for (const auto& o : observations_) out.put_vector(o.sinr);
  out.put_string(serialize_rng(mobility_rng_));
  out.put_string(serialize_rng(handover_rng_));
  out.put_string(serialize_rng(channel_rng_));
}

void NetworkEnv::deserialize(BinaryReader& in) {
  slot_ = in.get<std::int64_t>();
  population_ = mobility::PopulationProcess::deserialize(in);
  user_ids_ = in.get_vector<std::uint64_t>();
  serving_ = in.get_vector<int>();
  prev_loads_ = in.get_vector<int>();
  const auto n = in.get<std::uint64_t>();
  if (n != user_ids_.size() || serving_.size() != n || prev_loads_.size() != static_cast<std::size_t>(num_bs_))
    throw ParseError("env snapshot: inconsistent sizes");
  observations_.clear();
  for (std::uint64_t i = 0; i < n; ++i) {
    auto sinr = in.get_vector<double>();
    if (sinr.size() != static_cast<std::size_t>(num_bs_)) throw ParseError("env snapshot: bad SINR vector");
    observations_.push_back(compose_observation(std::move(sinr), prev_loads_, serving_[i]));
  }
  mobility_rng_ = deserialize_rng(in.get_string());
  handover_rng_ = deserialize_rng(in.get_string());
  channel_rng_ = deserialize_rng(in.get_string());
}

void write_sample_log(std::ostream& out, const StepResult& result) {
  char buf[256];
  for (std::size_t i = 0; i < result.samples.size(); ++i) {
    const auto& s = result.samples[i];
    const auto& u = result.users[i];
    std::snprintf(buf, sizeof buf,
                  "{\"slot\":%lld,\"user\":%llu,\"action\":%d,\"reward\":%.17g,\"sinr_serving\":%.17g,"
                  "\"load_serving\":%d,\"t_ho\":%.17g}\n",
                  static_cast<long long>(result.slot), static_cast<unsigned long long>(s.user_id), s.action, s.reward,
                  u.sinr_serving, u.load_serving, u.t_ho);
    out << buf;
  }
}

}  // namespace dtcell::env
