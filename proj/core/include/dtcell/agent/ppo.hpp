#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dtcell/agent/mask.hpp"
#include "dtcell/agent/policy.hpp"
#include "dtcell/common/rng.hpp"

namespace dtcell::agent {

struct PpoHyper {
  double clip = 0.2;
  double gae_lambda = 0.95;
  double gamma = 0.9;
  double learning_rate = 3e-4;
  int epochs = 4;
  int minibatch_size = 512;  // samples
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double max_grad_norm = 0.5;
  int sequence_length = 16;
  bool normalize_advantages = true;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// delta_t = r_t + gamma * v_{t+1} * (1 - done_t) - v_t with v_T = bootstrap;
/// A_t = sum_k (gamma * lambda)^k delta_{t+k}, truncated at terminal steps;
/// returns = advantages + values.
GaeResult gae_advantages(std::span<const double> rewards, std::span<const double> values,
                         std::span<const std::uint8_t> dones, double bootstrap_value, double gamma, double lambda);

/// A contiguous run of one user's decisions, replayed from a stored initial
/// recurrent state during the update.
struct Segment {
  AgentMemory initial;
  std::vector<double> features;  // length x input_size
  std::vector<std::uint8_t> masks;  // length x |B|
  std::vector<int> actions;
  std::vector<double> old_log_probs;
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t length() const { return actions.size(); }
};

struct LossStats {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
  double surrogate = 0.0;  // mean of min(rho*A, clip(rho)*A)
  std::size_t samples = 0;
};

/// Mean over samples of -min(rho*A, clip(rho)*A) + value_coef*(v - R)^2 - entropy_coef*H,
/// with the critic v and target R in the normalizer's space. Advantages are
/// used as stored. When `grad` is non-null it receives dLoss/dParams (BPTT
/// through every segment, initial states held fixed).
LossStats ppo_loss(const PolicyParameters& params, std::span<const Segment* const> segments, const PpoHyper& hyper,
                   std::vector<double>* grad);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t steps = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-5;
};

struct UpdateStats {
  LossStats first;  // statistics of the first minibatch before any step
  LossStats last;   // statistics of the final minibatch
  double mean_entropy = 0.0;
  double mean_kl = 0.0;
  int steps_taken = 0;
  int steps_rejected = 0;  // minibatches skipped for non-finite gradients
  double grad_norm = 0.0;  // pre-clip norm of the last gradient
};

/// Normalizes advantages (if enabled), refreshes the value normalizer from
/// the batch returns, then runs `epochs` passes of shuffled minibatch Adam
/// steps with global-norm clipping. Parameters stay float32-representable.
UpdateStats ppo_update(PolicyParameters& params, AdamState& adam, std::vector<Segment>& batch, const PpoHyper& hyper,
                       Rng& rng);

}  // namespace dtcell::agent
