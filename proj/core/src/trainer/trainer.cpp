#include "dtcell/trainer/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <thread>

#include "dtcell/agent/weights_io.hpp"
#include "dtcell/common/binary_io.hpp"
#include "dtcell/common/error.hpp"

namespace dtcell::trainer {

namespace {

constexpr std::uint64_t kEnvSeedStream = 0x7B0000;
constexpr std::uint64_t kPolicySeedStream = 0x7C0000;
constexpr std::uint64_t kInitStream = 0x7A0001;
constexpr std::uint64_t kUpdateStream = 0x7A0002;
constexpr char kMagic[4] = {'D', 'T', 'C', 'K'};

struct EnvRound {
  std::vector<UserRollout> rollouts;
  std::vector<double> utility;
};

EnvRound collect_env(EnvWorker& w, int env_index, const agent::PolicyParameters& params, int rollout_length,
                     int top_n, int sequence_length, const StepHook& hook) {
  const int hidden = params.shape().hidden;
  EnvRound out;
  std::map<std::uint64_t, std::size_t> index;
  for (int t = 0; t < rollout_length; ++t) {
    if (hook) hook(env_index, w.env.slot());
    const auto obs = w.env.observations();
    const auto ids = w.env.user_ids();
    const std::size_t n = ids.size();
    std::vector<agent::AgentMemory> memory(n);
    std::vector<std::size_t> slot_rollout(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto it = w.memory.find(ids[i]);
      memory[i] = it != w.memory.end() ? it->second : agent::AgentMemory::zeros(hidden);
      const auto [pos, fresh] = index.try_emplace(ids[i], out.rollouts.size());
      if (fresh) out.rollouts.push_back({env_index, ids[i], {}, {}, 0.0});
      auto& r = out.rollouts[pos->second];
      if (r.steps.size() % static_cast<std::size_t>(sequence_length) == 0) r.chunk_initial.push_back(memory[i]);
      slot_rollout[i] = pos->second;
    }
    const auto outputs = agent::forward_batch(obs, memory, top_n, params);
    std::vector<int> actions(n);
    std::vector<agent::ActionChoice> choices(n);
    for (std::size_t i = 0; i < n; ++i) {
      choices[i] = agent::sample_action(outputs[i], w.policy_rng);
      actions[i] = choices[i].action;
    }
    const auto result = w.env.step(actions);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& sample = result.samples[i];
      BufferedStep step;
      step.features = agent::observation_features(obs[i]);
      step.mask = outputs[i].mask;
      step.action = choices[i].action;
      step.log_prob = choices[i].log_prob;
      step.value = choices[i].value;
      step.reward = sample.reward;
      step.done = sample.done;
      step.user_count = static_cast<int>(n);
      out.rollouts[slot_rollout[i]].steps.push_back(std::move(step));
      if (sample.done)
        w.memory.erase(ids[i]);
      else
        w.memory[ids[i]] = std::move(memory[i]);
    }
    out.utility.push_back(result.network_utility);
  }

  const auto& ids = w.env.user_ids();
  if (!ids.empty()) {
    std::vector<agent::AgentMemory> memory(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto it = w.memory.find(ids[i]);
      memory[i] = it != w.memory.end() ? it->second : agent::AgentMemory::zeros(hidden);
    }
    const auto outputs = agent::forward_batch(w.env.observations(), memory, top_n, params);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto it = index.find(ids[i]);
      if (it == index.end()) continue;
      auto& r = out.rollouts[it->second];
      if (!r.steps.back().done) r.bootstrap_value = outputs[i].value;
    }
  }
  return out;
}

void put_memory(BinaryWriter& w, const agent::AgentMemory& m) {
  w.put_vector(m.h);
  w.put_vector(m.c);
}

agent::AgentMemory get_memory(BinaryReader& r, int hidden) {
  agent::AgentMemory m;
  m.h = r.get_vector<double>();
  m.c = r.get_vector<double>();
  if (m.h.size() != static_cast<std::size_t>(hidden) || m.c.size() != static_cast<std::size_t>(hidden))
    throw ParseError("checkpoint: bad recurrent state size");
  return m;
}

}  // namespace

TrainerConfig desk_trainer_config() {
  TrainerConfig c;
  c.sample_budget = 200'000;
  c.rollout_length = 16;
  c.ppo.learning_rate = 1e-3;
  c.ppo.minibatch_size = 256;
  return c;
}

void validate(const TrainerConfig& c) {
  if (c.parallel_envs < 1) throw ConfigError("trainer: parallel_envs must be >= 1");
  if (c.sample_budget <= 0) throw ConfigError("trainer: sample_budget must be positive");
  if (c.rollout_length < 1) throw ConfigError("trainer: rollout_length must be >= 1");
  if (c.hidden < 1) throw ConfigError("trainer: hidden size must be >= 1");
  if (c.checkpoint_interval < 0) throw ConfigError("trainer: checkpoint_interval must be >= 0");
  if (!c.initial_user_counts.empty() && c.initial_user_counts.size() != static_cast<std::size_t>(c.parallel_envs))
    throw ConfigError("trainer: initial_user_counts must list one count per environment");
  const auto& p = c.ppo;
  if (!(p.clip > 0.0 && p.clip < 1.0)) throw ConfigError("trainer: clip ratio must lie in (0, 1)");
  if (!(p.gae_lambda >= 0.0 && p.gae_lambda <= 1.0) || !(p.gamma >= 0.0 && p.gamma <= 1.0))
    throw ConfigError("trainer: gamma and lambda must lie in [0, 1]");
  if (!(p.learning_rate > 0.0) || p.epochs < 1 || p.minibatch_size < 1 || p.sequence_length < 1)
    throw ConfigError("trainer: invalid PPO hyperparameters");
}

std::vector<int> spread_user_counts(const radio::CountRange& range, int k) {
  if (k < 1) throw ConfigError("spread_user_counts: k must be >= 1");
  if (k == 1) return {static_cast<int>(std::lround(0.5 * (range.min + range.max)))};
  std::vector<int> counts(k);
  for (int i = 0; i < k; ++i)
    counts[i] = static_cast<int>(std::lround(range.min + (range.max - range.min) * static_cast<double>(i) / (k - 1)));
  return counts;
}

double steps_for_budget(std::int64_t budget, int k, double mean_users) {
  if (k < 1 || !(mean_users > 0.0)) throw ConfigError("steps_for_budget: k and mean_users must be positive");
  return static_cast<double>(budget) / (k * mean_users);
}

int resolve_worker_threads(int requested) {
  int threads = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* cap = std::getenv("DT_CELLSIM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(cap, &end, 10);
    if (end != cap && *end == '\0' && v > 0) threads = std::min(threads, static_cast<int>(v));
  }
  return threads;
}

std::vector<EnvWorker> spawn_envs(std::shared_ptr<const radio::ScenarioConfig> scenario,
                                  std::shared_ptr<const radio::ChannelModel> channel,
                                  std::shared_ptr<const mobility::MobilitySource> mobility,
                                  const std::vector<int>& initial_counts, std::uint64_t seed,
                                  const env::EnvOptions& options) {
  if (initial_counts.empty()) throw ConfigError("spawn_envs: at least one environment is required");
  std::vector<EnvWorker> workers;
  workers.reserve(initial_counts.size());
  for (std::size_t k = 0; k < initial_counts.size(); ++k) {
    env::NetworkEnv env(scenario, channel, mobility, options);
    env.reset(derive_seed(seed, kEnvSeedStream + k), initial_counts[k]);
    workers.push_back({std::move(env), make_rng(seed, kPolicySeedStream + k), {}, initial_counts[k]});
  }
  return workers;
}

std::size_t SampleBuffer::size() const {
  std::size_t n = 0;
  for (const auto& r : rollouts) n += r.steps.size();
  return n;
}

std::vector<int> SampleBuffer::sample_user_counts() const {
  std::vector<int> counts;
  for (const auto& r : rollouts)
    for (const auto& s : r.steps) counts.push_back(s.user_count);
  return counts;
}

double SampleBuffer::mean_reward() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& r : rollouts)
    for (const auto& s : r.steps) {
      sum += s.reward;
      ++n;
    }
  return n ? sum / static_cast<double>(n) : 0.0;
}

double SampleBuffer::mean_utility() const {
  if (env_step_utility.empty()) return 0.0;
  double sum = 0.0;
  for (double u : env_step_utility) sum += u;
  return sum / static_cast<double>(env_step_utility.size());
}

bool operator==(const BufferedStep& a, const BufferedStep& b) {
  return a.features == b.features && a.mask == b.mask && a.action == b.action && a.log_prob == b.log_prob &&
         a.value == b.value && a.reward == b.reward && a.done == b.done && a.user_count == b.user_count;
}

bool operator==(const UserRollout& a, const UserRollout& b) {
  return a.env_index == b.env_index && a.user_id == b.user_id && a.steps == b.steps &&
         a.chunk_initial == b.chunk_initial && a.bootstrap_value == b.bootstrap_value;
}

bool operator==(const SampleBuffer& a, const SampleBuffer& b) {
  return a.rollouts == b.rollouts && a.env_step_utility == b.env_step_utility &&
         a.sequence_length == b.sequence_length;
}

SampleBuffer collect_round(std::vector<EnvWorker>& workers, const agent::PolicyParameters& params,
                           int rollout_length, int top_n, int sequence_length, int threads, const StepHook& hook) {
  if (rollout_length < 1 || sequence_length < 1) throw ContractViolation("collect_round: lengths must be positive");
  const int k = static_cast<int>(workers.size());
  std::vector<EnvRound> results(k);
  std::vector<std::exception_ptr> errors(k);
  const int pool = std::clamp(threads, 1, std::max(k, 1));
  auto work = [&](int tid) {
    for (int e = tid; e < k; e += pool) {
      try {
        results[e] = collect_env(workers[e], e, params, rollout_length, top_n, sequence_length, hook);
      } catch (...) {
        errors[e] = std::current_exception();
      }
    }
  };
  if (pool == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads_vec;
    for (int t = 0; t < pool; ++t) threads_vec.emplace_back(work, t);
    for (auto& t : threads_vec) t.join();
  }
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);

  SampleBuffer buffer;
  buffer.sequence_length = sequence_length;
  for (auto& r : results) {
    for (auto& u : r.rollouts) buffer.rollouts.push_back(std::move(u));
    buffer.env_step_utility.insert(buffer.env_step_utility.end(), r.utility.begin(), r.utility.end());
  }
  return buffer;
}

std::vector<agent::Segment> build_segments(const SampleBuffer& buffer, double gamma, double lambda) {
  std::vector<agent::Segment> segments;
  const auto seq = static_cast<std::size_t>(buffer.sequence_length);
  for (const auto& r : buffer.rollouts) {
    const std::size_t n = r.steps.size();
    std::vector<double> rewards(n), values(n);
    std::vector<std::uint8_t> dones(n);
    for (std::size_t i = 0; i < n; ++i) {
      rewards[i] = r.steps[i].reward;
      values[i] = r.steps[i].value;
      dones[i] = r.steps[i].done ? 1 : 0;
    }
    const auto gae = agent::gae_advantages(rewards, values, dones, r.bootstrap_value, gamma, lambda);
    for (std::size_t start = 0, chunk = 0; start < n; start += seq, ++chunk) {
      agent::Segment seg;
      seg.initial = r.chunk_initial.at(chunk);
      for (std::size_t i = start; i < std::min(n, start + seq); ++i) {
        const auto& s = r.steps[i];
        seg.features.insert(seg.features.end(), s.features.begin(), s.features.end());
        seg.masks.insert(seg.masks.end(), s.mask.begin(), s.mask.end());
        seg.actions.push_back(s.action);
        seg.old_log_probs.push_back(s.log_prob);
        seg.advantages.push_back(gae.advantages[i]);
        seg.returns.push_back(gae.returns[i]);
      }
      segments.push_back(std::move(seg));
    }
  }
  return segments;
}

void write_curve_csv(std::ostream& out, const std::vector<CurvePoint>& curve) {
  out << "round,samples_seen,mean_utility,mean_reward,entropy,kl\n";
  char buf[256];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%d,%lld,%.10g,%.10g,%.10g,%.10g\n", p.round,
                  static_cast<long long>(p.samples_seen), p.mean_utility, p.mean_reward, p.entropy, p.kl);
    out << buf;
  }
}

void save_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_curve_csv(out, curve);
}

Trainer::Trainer(TrainerConfig config, std::shared_ptr<const radio::ScenarioConfig> scenario,
                 std::shared_ptr<const mobility::MobilitySource> mobility)
    : config_(std::move(config)), scenario_(std::move(scenario)), mobility_(std::move(mobility)) {
  validate(config_);
  channel_ = std::make_shared<radio::ChannelModel>(*scenario_);
  auto counts = config_.initial_user_counts;
  if (counts.empty()) counts = spread_user_counts(scenario_->user_count_range, config_.parallel_envs);
  config_.initial_user_counts = counts;
  workers_ = spawn_envs(scenario_, channel_, mobility_, counts, config_.seed, config_.env_options);
  Rng init = make_rng(config_.seed, kInitStream);
  params_ = agent::PolicyParameters::initialized({scenario_->num_base_stations(), config_.hidden}, init);
  update_rng_ = make_rng(config_.seed, kUpdateStream);
  threads_ = std::min(resolve_worker_threads(config_.threads), config_.parallel_envs);
  last_checkpoint_ = checkpoint_bytes();
}

SampleBuffer Trainer::collect() {
  return collect_round(workers_, params_, config_.rollout_length, scenario_->mask_top_n, config_.ppo.sequence_length,
                       threads_, hook_);
}

CurvePoint Trainer::run_round() {
  SampleBuffer buffer;
  try {
    buffer = collect();
  } catch (const std::exception& e) {
    if (++consecutive_faults_ > config_.max_consecutive_faults)
      throw std::runtime_error(std::string("environment fault persists after restore: ") + e.what());
    restore_bytes(last_checkpoint_);
    return curve_.empty() ? CurvePoint{round_, samples_seen_} : curve_.back();
  }
  consecutive_faults_ = 0;

  auto segments = build_segments(buffer, config_.ppo.gamma, config_.ppo.gae_lambda);
  const auto stats = agent::ppo_update(params_, adam_, segments, config_.ppo, update_rng_);
  samples_seen_ += static_cast<std::int64_t>(buffer.size());
  ++round_;

  const bool bad = !std::isfinite(stats.last.loss) || (stats.steps_taken == 0 && stats.steps_rejected > 0);
  nonfinite_rounds_ = bad ? nonfinite_rounds_ + 1 : 0;
  if (nonfinite_rounds_ >= config_.max_nonfinite_rounds)
    throw NumericError("training aborted: non-finite loss for " + std::to_string(nonfinite_rounds_) +
                       " consecutive rounds (round " + std::to_string(round_) + ", last loss " +
                       std::to_string(stats.last.loss) + ")");

  const CurvePoint point{round_, samples_seen_, buffer.mean_utility(), buffer.mean_reward(), stats.mean_entropy,
                         stats.mean_kl};
  curve_.push_back(point);

  if (stats_) {
    nlohmann::json j = {{"round", round_},
                        {"samples_seen", samples_seen_},
                        {"samples", buffer.size()},
                        {"loss", stats.last.loss},
                        {"policy_loss", stats.last.policy_loss},
                        {"value_loss", stats.last.value_loss},
                        {"entropy", stats.mean_entropy},
                        {"approx_kl", stats.mean_kl},
                        {"clip_fraction", stats.last.clip_fraction},
                        {"grad_norm", stats.grad_norm},
                        {"steps_taken", stats.steps_taken},
                        {"steps_rejected", stats.steps_rejected},
                        {"value_mean", params_.value_normalizer().mean},
                        {"value_std", params_.value_normalizer().stddev}};
    *stats_ << j.dump() << '\n';
  }

  const bool due = config_.checkpoint_interval > 0 && (round_ % config_.checkpoint_interval == 0 || finished());
  if (due) {
    last_checkpoint_ = checkpoint_bytes();
    if (!config_.checkpoint_dir.empty()) {
      std::filesystem::create_directories(config_.checkpoint_dir);
      char name[64];
      std::snprintf(name, sizeof name, "ckpt_%06d.bin", round_);
      const auto path = (std::filesystem::path(config_.checkpoint_dir) / name).string();
      write_file_bytes(path, last_checkpoint_);
      checkpoint_paths_.push_back(path);
    }
  }
  return point;
}

void Trainer::run(const std::function<void(const CurvePoint&)>& on_round) {
  while (!finished()) {
    const int before = round_;
    const auto point = run_round();
    if (on_round && round_ > before) on_round(point);
  }
}

std::string Trainer::checkpoint_bytes() const {
  BinaryWriter w;
  w.put_raw({kMagic, 4});
  w.put<std::uint32_t>(kCheckpointFormatVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(workers_.size()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params_.shape().num_bs));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(params_.shape().hidden));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(config_.rollout_length));
  w.put<std::uint64_t>(config_.seed);
  w.put<std::int32_t>(round_);
  w.put<std::int64_t>(samples_seen_);
  w.put<std::int32_t>(nonfinite_rounds_);
  w.put_string(agent::encode_weights(params_));
  w.put_vector(adam_.m);
  w.put_vector(adam_.v);
  w.put<std::int64_t>(adam_.steps);
  w.put_string(serialize_rng(update_rng_));
  w.put<std::uint64_t>(curve_.size());
  for (const auto& p : curve_) {
    w.put<std::int32_t>(p.round);
    w.put<std::int64_t>(p.samples_seen);
    w.put(p.mean_utility);
    w.put(p.mean_reward);
    w.put(p.entropy);
    w.put(p.kl);
  }
  for (const auto& worker : workers_) {
    w.put<std::int32_t>(worker.initial_users);
    worker.env.serialize(w);
    w.put_string(serialize_rng(worker.policy_rng));
    w.put<std::uint64_t>(worker.memory.size());
    for (const auto& [id, m] : worker.memory) {
      w.put<std::uint64_t>(id);
      put_memory(w, m);
    }
  }
  return w.take();
}

agent::PolicyParameters params_from_checkpoint(const std::string& bytes) {
  BinaryReader r(bytes);
  if (r.get_raw(4) != std::string_view(kMagic, 4)) throw ParseError("checkpoint: bad magic");
  if (r.get<std::uint32_t>() != kCheckpointFormatVersion) throw ParseError("checkpoint: unsupported format version");
  for (int i = 0; i < 4; ++i) r.get<std::uint32_t>();
  r.get<std::uint64_t>();
  r.get<std::int32_t>();
  r.get<std::int64_t>();
  r.get<std::int32_t>();
  return agent::decode_weights(r.get_string());
}

void Trainer::restore_bytes(const std::string& bytes) {
  BinaryReader r(bytes);
  if (r.get_raw(4) != std::string_view(kMagic, 4)) throw ParseError("checkpoint: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointFormatVersion)
    throw ParseError("checkpoint: format version " + std::to_string(version) + " is not supported (expected " +
                     std::to_string(kCheckpointFormatVersion) + ")");
  if (r.get<std::uint32_t>() != workers_.size() ||
      r.get<std::uint32_t>() != static_cast<std::uint32_t>(params_.shape().num_bs) ||
      r.get<std::uint32_t>() != static_cast<std::uint32_t>(params_.shape().hidden) ||
      r.get<std::uint32_t>() != static_cast<std::uint32_t>(config_.rollout_length) ||
      r.get<std::uint64_t>() != config_.seed)
    throw ParseError("checkpoint: trainer configuration does not match");
  const auto round = r.get<std::int32_t>();
  const auto samples = r.get<std::int64_t>();
  const auto nonfinite = r.get<std::int32_t>();
  auto params = agent::decode_weights(r.get_string());
  if (!(params.shape() == params_.shape())) throw ParseError("checkpoint: network shape mismatch");
  agent::AdamState adam;
  adam.m = r.get_vector<double>();
  adam.v = r.get_vector<double>();
  adam.steps = r.get<std::int64_t>();
  auto update_rng = deserialize_rng(r.get_string());
  const auto curve_size = r.get<std::uint64_t>();
  if (curve_size > bytes.size()) throw ParseError("truncated binary stream");
  std::vector<CurvePoint> curve(curve_size);
  for (auto& p : curve) {
    p.round = r.get<std::int32_t>();
    p.samples_seen = r.get<std::int64_t>();
    p.mean_utility = r.get<double>();
    p.mean_reward = r.get<double>();
    p.entropy = r.get<double>();
    p.kl = r.get<double>();
  }
  auto workers = workers_;
  for (auto& worker : workers) {
    worker.initial_users = r.get<std::int32_t>();
    worker.env.deserialize(r);
    worker.policy_rng = deserialize_rng(r.get_string());
    worker.memory.clear();
    const auto n = r.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < n; ++i) {
      const auto id = r.get<std::uint64_t>();
      worker.memory[id] = get_memory(r, params.shape().hidden);
    }
  }
  if (!r.at_end()) throw ParseError("checkpoint: trailing bytes");

  round_ = round;
  samples_seen_ = samples;
  nonfinite_rounds_ = nonfinite;
  params_ = std::move(params);
  adam_ = std::move(adam);
  update_rng_ = update_rng;
  curve_ = std::move(curve);
  workers_ = std::move(workers);
  last_checkpoint_ = bytes;
}

void Trainer::save_checkpoint(const std::string& path) const { write_file_bytes(path, checkpoint_bytes()); }

void Trainer::restore_checkpoint(const std::string& path) { restore_bytes(read_file_bytes(path)); }

}  // namespace dtcell::trainer
