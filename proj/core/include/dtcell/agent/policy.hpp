#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dtcell/agent/mask.hpp"
#include "dtcell/common/rng.hpp"
#include "dtcell/env/observation.hpp"

namespace dtcell::agent {

struct NetworkShape {
  int num_bs = 0;
  int hidden = 128;

  int input_size() const { return 3 * num_bs; }
  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// Running statistics of discounted returns. The critic head predicts
/// returns in this normalized space.
struct ValueNormalizer {
  double mean = 0.0;
  double stddev = 1.0;
  bool initialized = false;

  /// First call adopts the batch moments; later calls blend with weight `rate`.
  /// Non-finite returns are ignored.
  void update(std::span<const double> returns, double rate = 0.2);
};

/// Shared actor-critic weights: two tanh embedding layers (3|B| -> H -> H),
/// one LSTM cell (gate order i, f, g, o), an actor head (H -> |B| logits) and
/// a critic head (H -> 1). The actor logit of BS j also receives
/// 10 * (s0 * sinr_j + s1 * load_j + s2 * assoc_j) from the three shared
/// weights in "actor.skip", so a rule such as "strongest SINR, stay unless
/// much better" needs only three weights instead of |B| separate ones.
/// All trainable values live in one flat vector laid out tensor by tensor,
/// each tensor row-major.
class PolicyParameters {
 public:
  PolicyParameters() = default;
  static PolicyParameters zeros(const NetworkShape& shape);
  /// Uniform(+-1/sqrt(fan_in)) weights, small actor head, forget bias 1.
  /// Values are rounded to float32 so weight files round-trip exactly.
  static PolicyParameters initialized(const NetworkShape& shape, Rng& rng);

  const NetworkShape& shape() const { return shape_; }
  const std::vector<TensorSpec>& tensors() const { return specs_; }
  std::span<double> flat() { return values_; }
  std::span<const double> flat() const { return values_; }
  std::size_t size() const { return values_.size(); }

  std::span<double> tensor(std::string_view name);
  std::span<const double> tensor(std::string_view name) const;

  ValueNormalizer& value_normalizer() { return value_norm_; }
  const ValueNormalizer& value_normalizer() const { return value_norm_; }

  /// Rounds every trainable value (and the normalizer) to float32 precision.
  void round_to_float();

  friend bool operator==(const PolicyParameters& a, const PolicyParameters& b) {
    return a.shape_ == b.shape_ && a.values_ == b.values_ && a.value_norm_.mean == b.value_norm_.mean &&
           a.value_norm_.stddev == b.value_norm_.stddev;
  }

 private:
  explicit PolicyParameters(const NetworkShape& shape);

  NetworkShape shape_;
  std::vector<TensorSpec> specs_;
  std::vector<double> values_;
  ValueNormalizer value_norm_;
};

/// Per-user recurrent state; zero for a fresh arrival.
struct AgentMemory {
  std::vector<double> h;
  std::vector<double> c;

  static AgentMemory zeros(int hidden) { return {std::vector<double>(hidden, 0.0), std::vector<double>(hidden, 0.0)}; }
  friend bool operator==(const AgentMemory&, const AgentMemory&) = default;
};

/// Network input derived from an observation: SINR in dB scaled by 1/20,
/// loads scaled by 1/10, and the association one-hot as is.
std::vector<double> observation_features(const env::Observation& obs);

struct PolicyOutput {
  std::vector<double> probs;  // masked entries are exactly 0
  ActionMask mask;
  double value = 0.0;  // de-normalized critic output
};

/// One recurrent step. `memory` is replaced by the successor state.
/// Throws ContractViolation on shape mismatch or non-finite input.
PolicyOutput forward(const env::Observation& obs, AgentMemory& memory, const ActionMask& mask,
                     const PolicyParameters& params);

/// Batched step over many users sharing one parameter snapshot; masks are
/// top-`top_n` SINR masks. Bit-identical to calling forward() per user with
/// the same batch composition.
std::vector<PolicyOutput> forward_batch(std::span<const env::Observation> obs, std::span<AgentMemory> memory,
                                        int top_n, const PolicyParameters& params);

struct ActionChoice {
  int action = 0;
  double log_prob = 0.0;
  double value = 0.0;
};

/// Draws an action from a policy output (inverse CDF over unmasked entries).
ActionChoice sample_action(const PolicyOutput& out, Rng& rng);
/// Most probable action, lowest index on ties.
ActionChoice greedy_action(const PolicyOutput& out);

/// forward() followed by sample_action().
ActionChoice act(const env::Observation& obs, AgentMemory& memory, const ActionMask& mask,
                 const PolicyParameters& params, Rng& rng);

/// Entropy (nats) of a masked distribution.
double entropy(std::span<const double> probs);

}  // namespace dtcell::agent
