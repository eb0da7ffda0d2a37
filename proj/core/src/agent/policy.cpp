#include "dtcell/agent/policy.hpp"

#include <algorithm>
#include <cmath>

#include "dtcell/common/error.hpp"
#include "network.hpp"

namespace dtcell::agent {

namespace {

constexpr double kSinrDbLimit = 50.0;
constexpr double kSinrDbScale = 1.0 / 20.0;
constexpr double kLoadScale = 0.1;
constexpr double kActorInitScale = 0.01;

std::vector<TensorSpec> make_specs(const NetworkShape& shape) {
  const auto b = static_cast<std::size_t>(shape.num_bs), h = static_cast<std::size_t>(shape.hidden),
             f = static_cast<std::size_t>(shape.input_size());
  std::vector<TensorSpec> specs = {
      {"embed1.weight", {h, f}},     {"embed1.bias", {h}},         {"embed2.weight", {h, h}},
      {"embed2.bias", {h}},          {"lstm.weight_ih", {4 * h, h}}, {"lstm.weight_hh", {4 * h, h}},
      {"lstm.bias", {4 * h}},        {"actor.weight", {b, h}},     {"actor.bias", {b}},
      {"actor.skip", {3}},          {"critic.weight", {1, h}},     {"critic.bias", {1}},
  };
  std::size_t offset = 0;
  for (auto& s : specs) {
    s.size = 1;
    for (auto d : s.shape) s.size *= d;
    s.offset = offset;
    offset += s.size;
  }
  return specs;
}

double round_float(double v) { return static_cast<double>(static_cast<float>(v)); }

void check_observation(const env::Observation& obs, int num_bs) {
  const auto n = static_cast<std::size_t>(num_bs);
  if (obs.sinr.size() != n || obs.prev_loads.size() != n || obs.prev_assoc.size() != n)
    throw ContractViolation("policy: observation size does not match the network");
  for (const auto* v : {&obs.sinr, &obs.prev_loads, &obs.prev_assoc})
    for (double x : *v)
      if (!std::isfinite(x)) throw ContractViolation("policy: non-finite observation");
}

std::vector<PolicyOutput> run_step(const PolicyParameters& params, std::span<const env::Observation> obs,
                                   std::span<AgentMemory> memory, std::span<const ActionMask> masks) {
  const detail::Layout layout(params.shape());
  const detail::NetMaps<const double> w(params.flat().data(), layout);
  const auto S = static_cast<Eigen::Index>(obs.size());
  const auto H = static_cast<std::size_t>(layout.H);
  detail::StepCache cache;
  cache.x.resize(layout.F, S);
  cache.h_prev.resize(layout.H, S);
  cache.c_prev.resize(layout.H, S);
  cache.mask.resize(layout.B, S);
  for (Eigen::Index j = 0; j < S; ++j) {
    const auto& o = obs[j];
    check_observation(o, layout.B);
    const auto& m = memory[j];
    if (m.h.size() != H || m.c.size() != H) throw ContractViolation("policy: memory size does not match the network");
    const auto f = observation_features(o);
    for (int k = 0; k < layout.F; ++k) cache.x(k, j) = f[k];
    for (std::size_t k = 0; k < H; ++k) {
      cache.h_prev(k, j) = m.h[k];
      cache.c_prev(k, j) = m.c[k];
    }
    const auto& mask = masks[j];
    if (mask.size() != static_cast<std::size_t>(layout.B)) throw ContractViolation("policy: mask size mismatch");
    bool any = false;
    for (int k = 0; k < layout.B; ++k) {
      cache.mask(k, j) = mask[k] ? 1.0 : 0.0;
      any = any || mask[k];
    }
    if (!any) throw ContractViolation("policy: empty action mask");
  }
  detail::step_forward(w, layout, cache);

  const auto& norm = params.value_normalizer();
  std::vector<PolicyOutput> out(obs.size());
  for (Eigen::Index j = 0; j < S; ++j) {
    auto& r = out[j];
    r.probs.assign(cache.probs.col(j).data(), cache.probs.col(j).data() + layout.B);
    r.mask = masks[j];
    r.value = norm.mean + norm.stddev * cache.vn(j);
    auto& m = memory[j];
    for (std::size_t k = 0; k < H; ++k) {
      m.h[k] = cache.h(k, j);
      m.c[k] = cache.c(k, j);
    }
  }
  return out;
}

}  // namespace

void ValueNormalizer::update(std::span<const double> returns, double rate) {
  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (double r : returns) {
    if (!std::isfinite(r)) continue;
    sum += r;
    sq += r * r;
    ++count;
  }
  if (count == 0) return;
  const double n = static_cast<double>(count);
  const double m = sum / n;
  const double second = sq / n;
  if (!initialized) {
    mean = m;
    stddev = std::sqrt(std::max(second - m * m, 0.0));
    initialized = true;
  } else {
    const double old_second = stddev * stddev + mean * mean;
    mean = (1.0 - rate) * mean + rate * m;
    const double blended = (1.0 - rate) * old_second + rate * second;
    stddev = std::sqrt(std::max(blended - mean * mean, 0.0));
  }
  stddev = std::max(stddev, 1e-3);
  mean = round_float(mean);
  stddev = round_float(stddev);
}

PolicyParameters::PolicyParameters(const NetworkShape& shape) : shape_(shape), specs_(make_specs(shape)) {
  if (shape.num_bs < 1 || shape.hidden < 1) throw ConfigError("policy: |B| and hidden size must be positive");
  values_.assign(detail::Layout(shape).total, 0.0);
}

PolicyParameters PolicyParameters::zeros(const NetworkShape& shape) { return PolicyParameters(shape); }

PolicyParameters PolicyParameters::initialized(const NetworkShape& shape, Rng& rng) {
  PolicyParameters p(shape);
  for (const auto& spec : p.specs_) {
    if (spec.shape.size() != 2) continue;
    double bound = 1.0 / std::sqrt(static_cast<double>(spec.shape[1]));
    if (spec.name == "actor.weight") bound *= kActorInitScale;
    for (std::size_t i = 0; i < spec.size; ++i) p.values_[spec.offset + i] = uniform(rng, -bound, bound);
  }
  auto bias = p.tensor("lstm.bias");
  const auto h = static_cast<std::size_t>(shape.hidden);
  std::fill(bias.begin() + h, bias.begin() + 2 * h, 1.0);
  p.round_to_float();
  return p;
}

std::span<double> PolicyParameters::tensor(std::string_view name) {
  for (const auto& s : specs_)
    if (s.name == name) return std::span<double>(values_).subspan(s.offset, s.size);
  throw LookupError("unknown tensor " + std::string(name));
}

std::span<const double> PolicyParameters::tensor(std::string_view name) const {
  return const_cast<PolicyParameters*>(this)->tensor(name);
}

void PolicyParameters::round_to_float() {
  for (auto& v : values_) v = round_float(v);
  value_norm_.mean = round_float(value_norm_.mean);
  value_norm_.stddev = round_float(value_norm_.stddev);
}

std::vector<double> observation_features(const env::Observation& obs) {
  const std::size_t b = obs.num_bs();
  std::vector<double> f(3 * b);
  for (std::size_t k = 0; k < b; ++k) {
    const double db = obs.sinr[k] > 0.0 ? 10.0 * std::log10(obs.sinr[k]) : -kSinrDbLimit;
    f[k] = std::clamp(db, -kSinrDbLimit, kSinrDbLimit) * kSinrDbScale;
    f[b + k] = obs.prev_loads[k] * kLoadScale;
    f[2 * b + k] = obs.prev_assoc[k];
  }
  return f;
}

PolicyOutput forward(const env::Observation& obs, AgentMemory& memory, const ActionMask& mask,
                     const PolicyParameters& params) {
  return std::move(run_step(params, {&obs, 1}, {&memory, 1}, {&mask, 1}).front());
}

std::vector<PolicyOutput> forward_batch(std::span<const env::Observation> obs, std::span<AgentMemory> memory, int top_n,
                                        const PolicyParameters& params) {
  if (obs.size() != memory.size()) throw ContractViolation("forward_batch: observation/memory count mismatch");
  if (obs.empty()) return {};
  std::vector<ActionMask> masks;
  masks.reserve(obs.size());
  for (const auto& o : obs) masks.push_back(top_n_mask(o.sinr, top_n));
  return run_step(params, obs, memory, masks);
}

ActionChoice sample_action(const PolicyOutput& out, Rng& rng) {
  const double u = uniform(rng, 0.0, 1.0);
  double cum = 0.0;
  int chosen = -1;
  for (std::size_t k = 0; k < out.probs.size(); ++k) {
    if (!out.mask[k] || out.probs[k] <= 0.0) continue;
    chosen = static_cast<int>(k);
    cum += out.probs[k];
    if (u < cum) break;
  }
  if (chosen < 0) throw NumericError("sample_action: distribution has no support");
  return {chosen, std::log(out.probs[chosen]), out.value};
}

ActionChoice greedy_action(const PolicyOutput& out) {
  int best = -1;
  for (std::size_t k = 0; k < out.probs.size(); ++k)
    if (out.mask[k] && (best < 0 || out.probs[k] > out.probs[best])) best = static_cast<int>(k);
  if (best < 0) throw NumericError("greedy_action: empty mask");
  return {best, std::log(out.probs[best]), out.value};
}

ActionChoice act(const env::Observation& obs, AgentMemory& memory, const ActionMask& mask,
                 const PolicyParameters& params, Rng& rng) {
  return sample_action(forward(obs, memory, mask, params), rng);
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

}  // namespace dtcell::agent
