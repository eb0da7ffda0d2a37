#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dtcell/agent/policy.hpp"
#include "dtcell/agent/ppo.hpp"
#include "dtcell/common/rng.hpp"

namespace dtcell::testing {

struct GradientCheck {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t coordinates = 0;
};

inline env::Observation random_observation(int num_bs, Rng& rng) {
  env::Observation o;
  for (int k = 0; k < num_bs; ++k) {
    o.sinr.push_back(std::exp(2.0 * standard_normal(rng)));
    o.prev_loads.push_back(static_cast<double>(uniform_index(rng, 11)));
    o.prev_assoc.push_back(0.0);
  }
  if (uniform(rng, 0.0, 1.0) < 0.8) o.prev_assoc[uniform_index(rng, num_bs)] = 1.0;
  return o;
}

/// Builds `count` segments of `length` steps with non-zero initial states.
/// Old log-probs sit either inside the clip band or well outside it; a zero
/// `clip` makes them equal to the current policy's.
inline std::vector<agent::Segment> random_segments(const agent::PolicyParameters& params, int count, int length,
                                                   double clip, Rng& rng) {
  const int b = params.shape().num_bs, h = params.shape().hidden;
  std::vector<agent::Segment> segs;
  for (int s = 0; s < count; ++s) {
    agent::Segment seg;
    seg.initial = agent::AgentMemory::zeros(h);
    for (int k = 0; k < h; ++k) {
      seg.initial.h[k] = uniform(rng, -0.5, 0.5);
      seg.initial.c[k] = uniform(rng, -1.0, 1.0);
    }
    auto memory = seg.initial;
    for (int t = 0; t < length; ++t) {
      const auto obs = random_observation(b, rng);
      const auto mask = agent::top_n_mask(obs.sinr, 2 + static_cast<int>(uniform_index(rng, b - 1)));
      const auto out = agent::forward(obs, memory, mask, params);
      const auto f = agent::observation_features(obs);
      seg.features.insert(seg.features.end(), f.begin(), f.end());
      seg.masks.insert(seg.masks.end(), mask.begin(), mask.end());
      std::vector<int> allowed;
      for (int k = 0; k < b; ++k)
        if (mask[k]) allowed.push_back(k);
      const int a = allowed[uniform_index(rng, allowed.size())];
      seg.actions.push_back(a);
      const double shift = uniform(rng, 0.0, 1.0) < 0.75 ? uniform(rng, -0.5, 0.5) * clip : (uniform(rng, 0.0, 1.0) < 0.5 ? -3.0 : 3.0) * clip;
      seg.old_log_probs.push_back(std::log(out.probs[a]) - shift);
      seg.advantages.push_back(standard_normal(rng));
      seg.returns.push_back(3.0 * standard_normal(rng));
    }
    segs.push_back(std::move(seg));
  }
  return segs;
}

/// Analytic PPO gradient against central differences with step `h` on an
/// H=8, |B|=4 network over 32 samples (two sequences of 16). Relative error
/// per coordinate uses max(|analytic|, |numeric|, floor) as denominator.
inline GradientCheck ppo_gradient_check(std::uint64_t seed, double h = 1e-4, double floor = 1e-3) {
  Rng rng(seed);
  auto params = agent::PolicyParameters::initialized({4, 8}, rng);
  for (auto& v : params.flat()) v += 0.3 * standard_normal(rng);
  params.value_normalizer() = {0.5, 2.0, true};
  agent::PpoHyper hyper;
  const auto segs = random_segments(params, 2, 16, hyper.clip, rng);
  const std::vector<const agent::Segment*> ptrs = {&segs[0], &segs[1]};
  std::vector<double> grad;
  agent::ppo_loss(params, ptrs, hyper, &grad);

  GradientCheck out;
  auto flat = params.flat();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double keep = flat[i];
    flat[i] = keep + h;
    const double up = agent::ppo_loss(params, ptrs, hyper, nullptr).loss;
    flat[i] = keep - h;
    const double down = agent::ppo_loss(params, ptrs, hyper, nullptr).loss;
    flat[i] = keep;
    const double numeric = (up - down) / (2.0 * h);
    const double err = std::abs(numeric - grad[i]);
    out.max_abs_error = std::max(out.max_abs_error, err);
    out.max_rel_error = std::max(out.max_rel_error, err / std::max({std::abs(numeric), std::abs(grad[i]), floor}));
  }
  out.coordinates = flat.size();
  return out;
}

/// Two-armed bandit with fixed rewards (arm 0 pays 1, arm 1 pays 0). Each
/// update draws `batch` single-step episodes from the current policy.
/// Returns the probability of arm 0 after `updates` PPO updates.
inline double bandit_better_arm_probability(std::uint64_t seed, int updates, int batch = 64, int hidden = 128) {
  Rng rng(seed);
  auto params = agent::PolicyParameters::initialized({2, hidden}, rng);
  agent::AdamState adam;
  agent::PpoHyper hyper;
  env::Observation obs{{1.0, 1.0}, {1.0, 1.0}, {0.0, 0.0}};
  const agent::ActionMask mask{1, 1};
  const auto zero = agent::AgentMemory::zeros(hidden);
  const auto features = agent::observation_features(obs);
  for (int u = 0; u < updates; ++u) {
    std::vector<agent::Segment> segs;
    for (int i = 0; i < batch; ++i) {
      auto memory = zero;
      const auto choice = agent::act(obs, memory, mask, params, rng);
      const double reward = choice.action == 0 ? 1.0 : 0.0;
      const std::uint8_t done = 1;
      const auto gae = agent::gae_advantages({&reward, 1}, {&choice.value, 1}, {&done, 1}, 0.0, hyper.gamma,
                                             hyper.gae_lambda);
      agent::Segment seg;
      seg.initial = zero;
      seg.features = features;
      seg.masks = mask;
      seg.actions = {choice.action};
      seg.old_log_probs = {choice.log_prob};
      seg.advantages = gae.advantages;
      seg.returns = gae.returns;
      segs.push_back(std::move(seg));
    }
    agent::ppo_update(params, adam, segs, hyper, rng);
  }
  auto memory = zero;
  return agent::forward(obs, memory, mask, params).probs[0];
}

}  // namespace dtcell::testing
