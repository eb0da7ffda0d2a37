#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "dtcell/agent/mask.hpp"
#include "dtcell/agent/policy.hpp"
#include "dtcell/agent/ppo.hpp"
#include "dtcell/agent/weights_io.hpp"
#include "dtcell/common/error.hpp"
#include "support/agent_checks.hpp"

using namespace dtcell;
using namespace dtcell::agent;
using Catch::Approx;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Straight-line evaluation of the network from the named tensors.
struct LoopNet {
  const PolicyParameters& p;
  int B, H, F;

  explicit LoopNet(const PolicyParameters& params)
      : p(params), B(params.shape().num_bs), H(params.shape().hidden), F(params.shape().input_size()) {}

  std::vector<double> dense(std::string_view w, std::string_view b, const std::vector<double>& x, int rows) const {
    const auto W = p.tensor(w), bias = p.tensor(b);
    const int cols = static_cast<int>(x.size());
    std::vector<double> y(rows);
    for (int r = 0; r < rows; ++r) {
      double s = bias[r];
      for (int c = 0; c < cols; ++c) s += W[r * cols + c] * x[c];
      y[r] = s;
    }
    return y;
  }

  // Returns (logits, normalized value); updates h and c.
  std::pair<std::vector<double>, double> step(const std::vector<double>& x, std::vector<double>& h,
                                              std::vector<double>& c) const {
    auto e1 = dense("embed1.weight", "embed1.bias", x, H);
    for (auto& v : e1) v = std::tanh(v);
    auto e2 = dense("embed2.weight", "embed2.bias", e1, H);
    for (auto& v : e2) v = std::tanh(v);
    const auto wih = p.tensor("lstm.weight_ih"), whh = p.tensor("lstm.weight_hh"), bl = p.tensor("lstm.bias");
    std::vector<double> z(4 * H);
    for (int r = 0; r < 4 * H; ++r) {
      double s = bl[r];
      for (int k = 0; k < H; ++k) s += wih[r * H + k] * e2[k] + whh[r * H + k] * h[k];
      z[r] = s;
    }
    for (int k = 0; k < H; ++k) {
      const double i = sigmoid(z[k]), f = sigmoid(z[H + k]), g = std::tanh(z[2 * H + k]), o = sigmoid(z[3 * H + k]);
      c[k] = f * c[k] + i * g;
      h[k] = o * std::tanh(c[k]);
    }
    auto logits = dense("actor.weight", "actor.bias", h, B);
    const auto skip = p.tensor("actor.skip");
    for (int k = 0; k < B; ++k) logits[k] += 10.0 * (skip[0] * x[k] + skip[1] * x[B + k] + skip[2] * x[2 * B + k]);
    const double v = dense("critic.weight", "critic.bias", h, 1)[0];
    return {logits, v};
  }
};

}  // namespace

TEST_CASE("top_n_mask picks the strongest entries") {
  const std::vector<double> sinr = {5, 1, 3, 2};
  CHECK(top_n_mask(sinr, 2) == ActionMask{1, 0, 1, 0});
  CHECK(top_n_mask(sinr, 4) == ActionMask{1, 1, 1, 1});
  CHECK(top_n_mask(sinr, 9) == ActionMask{1, 1, 1, 1});
  CHECK(top_n_mask(std::vector<double>{2, 2, 2}, 2) == ActionMask{1, 1, 0});
  CHECK_THROWS_AS(top_n_mask(sinr, 0), ContractViolation);
}

TEST_CASE("top_n_mask agrees with a full-sort oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int b = 1 + static_cast<int>(uniform_index(rng, 20));
    const int n = 1 + static_cast<int>(uniform_index(rng, 25));
    std::vector<double> sinr(b);
    for (auto& s : sinr) s = std::floor(uniform(rng, 0.0, 8.0));  // plenty of ties
    std::vector<std::pair<double, int>> keyed;
    for (int k = 0; k < b; ++k) keyed.emplace_back(-sinr[k], k);
    std::sort(keyed.begin(), keyed.end());
    ActionMask expect(b, 0);
    for (int i = 0; i < std::min(n, b); ++i) expect[keyed[i].second] = 1;
    const auto mask = top_n_mask(sinr, n);
    REQUIRE(mask == expect);
    CHECK(std::count(mask.begin(), mask.end(), 1) == std::min(n, b));
  }
}

TEST_CASE("zero weights give a uniform distribution over the mask") {
  const auto params = PolicyParameters::zeros({6, 16});
  Rng rng(3);
  const auto obs = testing::random_observation(6, rng);
  auto memory = AgentMemory::zeros(16);
  const auto mask = top_n_mask(obs.sinr, 4);
  const auto out = forward(obs, memory, mask, params);
  for (int k = 0; k < 6; ++k) {
    if (mask[k])
      CHECK(out.probs[k] == Approx(0.25).epsilon(1e-15));
    else
      CHECK(out.probs[k] == 0.0);
  }
}

TEST_CASE("forward matches a straight-line evaluation") {
  Rng rng(11);
  auto params = PolicyParameters::initialized({3, 5}, rng);
  for (auto& v : params.flat()) v = uniform(rng, -0.8, 0.8);
  params.value_normalizer() = {1.5, 0.25, true};
  const LoopNet net(params);
  auto memory = AgentMemory::zeros(5);
  std::vector<double> h(5, 0.0), c(5, 0.0);
  for (int t = 0; t < 6; ++t) {
    const auto obs = testing::random_observation(3, rng);
    const auto mask = top_n_mask(obs.sinr, 2);
    const auto out = forward(obs, memory, mask, params);
    const auto [logits, vn] = net.step(observation_features(obs), h, c);
    CHECK(out.value == Approx(1.5 + 0.25 * vn).epsilon(1e-12));
    double mx = -1e300, sum = 0.0;
    for (int k = 0; k < 3; ++k)
      if (mask[k]) mx = std::max(mx, logits[k]);
    for (int k = 0; k < 3; ++k)
      if (mask[k]) sum += std::exp(logits[k] - mx);
    for (int k = 0; k < 3; ++k) {
      const double expect = mask[k] ? std::exp(logits[k] - mx) / sum : 0.0;
      CHECK(out.probs[k] == Approx(expect).epsilon(1e-12).margin(1e-15));
    }
    for (int k = 0; k < 5; ++k) {
      CHECK(memory.h[k] == Approx(h[k]).epsilon(1e-12).margin(1e-15));
      CHECK(memory.c[k] == Approx(c[k]).epsilon(1e-12).margin(1e-15));
    }
  }
}

TEST_CASE("masked actions have zero probability and entropy is bounded by log N") {
  Rng rng(5);
  auto params = PolicyParameters::initialized({10, 32}, rng);
  for (auto& v : params.flat()) v *= 20.0;
  auto memory = AgentMemory::zeros(32);
  for (int t = 0; t < 50; ++t) {
    const auto obs = testing::random_observation(10, rng);
    const int n = 1 + static_cast<int>(uniform_index(rng, 10));
    const auto mask = top_n_mask(obs.sinr, n);
    const auto out = forward(obs, memory, mask, params);
    double total = 0.0;
    for (int k = 0; k < 10; ++k) {
      if (!mask[k]) CHECK(out.probs[k] == 0.0);
      total += out.probs[k];
    }
    CHECK(total == Approx(1.0).epsilon(1e-12));
    CHECK(entropy(out.probs) <= std::log(static_cast<double>(n)) + 1e-12);
    const auto choice = sample_action(out, rng);
    CHECK(mask[choice.action]);
    CHECK(std::isfinite(choice.log_prob));
  }
}

TEST_CASE("forward rejects non-finite input and shape mismatches") {
  const auto params = PolicyParameters::zeros({3, 4});
  auto memory = AgentMemory::zeros(4);
  env::Observation obs{{1.0, NAN, 1.0}, {0, 0, 0}, {0, 0, 0}};
  CHECK_THROWS_AS(forward(obs, memory, ActionMask{1, 1, 1}, params), ContractViolation);
  obs.sinr = {1.0, 2.0};
  CHECK_THROWS_AS(forward(obs, memory, ActionMask{1, 1, 1}, params), ContractViolation);
}

TEST_CASE("forward is deterministic and batching matches single steps") {
  Rng rng(9);
  const auto params = PolicyParameters::initialized({5, 16}, rng);
  std::vector<env::Observation> obs;
  for (int i = 0; i < 7; ++i) obs.push_back(testing::random_observation(5, rng));
  std::vector<AgentMemory> m1(7, AgentMemory::zeros(16)), m2 = m1;
  const auto a = forward_batch(obs, m1, 3, params);
  const auto b = forward_batch(obs, m2, 3, params);
  for (int i = 0; i < 7; ++i) {
    CHECK(a[i].probs == b[i].probs);
    CHECK(a[i].value == b[i].value);
    auto single = AgentMemory::zeros(16);
    const auto s = forward(obs[i], single, top_n_mask(obs[i].sinr, 3), params);
    for (int k = 0; k < 5; ++k) CHECK(s.probs[k] == Approx(a[i].probs[k]).epsilon(1e-12).margin(1e-15));
  }
  CHECK(m1 == m2);
}

TEST_CASE("act: one-hot distribution and Monte Carlo frequencies") {
  Rng rng(1);
  const auto params = PolicyParameters::zeros({4, 8});
  auto memory = AgentMemory::zeros(8);
  env::Observation obs{{1, 2, 3, 4}, {0, 0, 0, 0}, {0, 0, 0, 0}};
  const auto only = act(obs, memory, ActionMask{0, 0, 1, 0}, params, rng);
  CHECK(only.action == 2);
  CHECK(only.log_prob == 0.0);

  PolicyOutput out{{0.1, 0.0, 0.6, 0.3}, {1, 0, 1, 1}, 0.0};
  std::vector<int> counts(4, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const auto c = sample_action(out, rng);
    ++counts[c.action];
    REQUIRE(c.log_prob == std::log(out.probs[c.action]));
  }
  for (int k = 0; k < 4; ++k) CHECK(std::abs(counts[k] / double(draws) - out.probs[k]) < 0.01);
  CHECK(counts[1] == 0);
  CHECK(greedy_action(out).action == 2);
}

TEST_CASE("gae special cases and brute-force oracle") {
  Rng rng(2);
  const int n = 20;
  std::vector<double> r(n), v(n);
  std::vector<std::uint8_t> d(n, 0);
  for (int i = 0; i < n; ++i) {
    r[i] = standard_normal(rng);
    v[i] = standard_normal(rng);
    d[i] = uniform(rng, 0.0, 1.0) < 0.15;
  }
  const double boot = 0.7;
  auto delta = [&](int i, double gamma) {
    const double next = i + 1 < n ? v[i + 1] : boot;
    return r[i] + gamma * next * (d[i] ? 0.0 : 1.0) - v[i];
  };

  const auto lam0 = gae_advantages(r, v, d, boot, 0.9, 0.0);
  for (int i = 0; i < n; ++i) CHECK(lam0.advantages[i] == delta(i, 0.9));
  const auto g0 = gae_advantages(r, v, d, boot, 0.0, 0.95);
  for (int i = 0; i < n; ++i) CHECK(g0.advantages[i] == r[i] - v[i]);

  const double gamma = 0.9, lambda = 0.95;
  const auto res = gae_advantages(r, v, d, boot, gamma, lambda);
  for (int t = 0; t < n; ++t) {
    double a = 0.0, w = 1.0;
    for (int k = t; k < n; ++k) {
      a += w * delta(k, gamma);
      if (d[k]) break;
      w *= gamma * lambda;
    }
    CHECK(res.advantages[t] == Approx(a).margin(1e-10));
    CHECK(res.returns[t] == Approx(a + v[t]).margin(1e-10));
  }
}

TEST_CASE("ppo gradient matches central finite differences") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto check = testing::ppo_gradient_check(seed);
    INFO("seed " << seed << " max abs " << check.max_abs_error);
    CHECK(check.max_rel_error < 1e-4);
  }
}

TEST_CASE("identical policies give unit ratios and surrogate equal to the mean advantage") {
  Rng rng(4);
  const auto params = PolicyParameters::initialized({4, 8}, rng);
  const auto segs = testing::random_segments(params, 3, 5, 0.0, rng);
  double mean_adv = 0.0;
  std::size_t n = 0;
  std::vector<const Segment*> ptrs;
  for (const auto& s : segs) {
    ptrs.push_back(&s);
    for (double a : s.advantages) {
      mean_adv += a;
      ++n;
    }
  }
  mean_adv /= static_cast<double>(n);
  const auto stats = ppo_loss(params, ptrs, PpoHyper{}, nullptr);
  CHECK(stats.clip_fraction == 0.0);
  CHECK(std::abs(stats.approx_kl) < 1e-12);
  CHECK(stats.surrogate == Approx(mean_adv).margin(1e-9));
}

TEST_CASE("zero advantages and no entropy bonus leave the actor head untouched") {
  Rng rng(6);
  auto params = PolicyParameters::initialized({4, 8}, rng);
  auto segs = testing::random_segments(params, 2, 8, 0.2, rng);
  for (auto& s : segs) std::fill(s.advantages.begin(), s.advantages.end(), 0.0);
  PpoHyper hyper;
  hyper.entropy_coef = 0.0;
  std::vector<const Segment*> ptrs = {&segs[0], &segs[1]};
  std::vector<double> grad;
  ppo_loss(params, ptrs, hyper, &grad);
  const auto& specs = params.tensors();
  for (const auto& s : specs)
    if (s.name.rfind("actor.", 0) == 0)
      for (std::size_t i = 0; i < s.size; ++i) REQUIRE(grad[s.offset + i] == 0.0);

  const auto before = params;
  AdamState adam;
  ppo_update(params, adam, segs, hyper, rng);
  for (const auto* name : {"actor.weight", "actor.bias", "actor.skip"}) {
    const auto a = before.tensor(name);
    const auto b = std::as_const(params).tensor(name);
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
  }
}

TEST_CASE("non-finite gradients are rejected") {
  Rng rng(8);
  auto params = PolicyParameters::initialized({4, 8}, rng);
  auto segs = testing::random_segments(params, 2, 4, 0.2, rng);
  segs[0].returns[0] = std::numeric_limits<double>::infinity();
  PpoHyper hyper;
  hyper.normalize_advantages = false;
  hyper.epochs = 1;
  const auto before = params;
  AdamState adam;
  const auto stats = ppo_update(params, adam, segs, hyper, rng);
  CHECK(stats.steps_rejected >= 1);
  CHECK(stats.steps_taken == 0);
  CHECK(std::equal(before.flat().begin(), before.flat().end(), params.flat().begin()));
  CHECK(std::isfinite(params.value_normalizer().mean));
}

TEST_CASE("two-armed bandit converges to the better arm") {
  CHECK(testing::bandit_better_arm_probability(1, 200) >= 0.95);
}

TEST_CASE("weights round-trip bit-exactly and reject damaged files") {
  Rng rng(12);
  auto params = PolicyParameters::initialized({6, 16}, rng);
  params.value_normalizer() = {3.25, 0.5, true};
  const auto bytes = encode_weights(params);
  const auto back = decode_weights(bytes);
  CHECK(back == params);
  CHECK(back.shape() == params.shape());
  CHECK(encode_weights(back) == bytes);
  CHECK_THROWS_AS(decode_weights(bytes.substr(0, bytes.size() - 3)), ParseError);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_weights(bad), ParseError);
  auto version = bytes;
  version[4] = 9;
  CHECK_THROWS_AS(decode_weights(version), ParseError);
}
