// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: dtcell_acceptance [name...]   (no names runs everything)

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "dtcell/common/rng.hpp"
#include "dtcell/env/link.hpp"
#include "dtcell/eval/evaluate.hpp"
#include "dtcell/eval/trajectory_metrics.hpp"
#include "dtcell/mobility/mobility_source.hpp"
#include "dtcell/mobility/street_graph.hpp"
#include "dtcell/radio/channel.hpp"
#include "dtcell/radio/scenario.hpp"
#include "dtcell/trainer/trainer.hpp"
#include "support/agent_checks.hpp"

using namespace dtcell;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  const char* name;
  double time_limit;  // seconds; 0 for none
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel_err(double got, double want) {
  if (got == want) return 0.0;
  return std::abs(got - want) / std::max(std::abs(want), std::numeric_limits<double>::min());
}

// ---------------------------------------------------------------------------
// Link equations against straight-line formulas.

Outcome equation_oracles() {
  Rng rng(101);
  double worst_sinr = 0, worst_rate = 0, worst_service = 0, worst_reward = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 43));
    std::vector<double> rx(n), noise(n);
    std::vector<int> band(n);
    for (int j = 0; j < n; ++j) {
      rx[j] = std::pow(10.0, uniform(rng, -15.0, -3.0));
      noise[j] = std::pow(10.0, uniform(rng, -14.0, -10.0));
      band[j] = static_cast<int>(uniform_index(rng, 2));
    }
    const auto sinr = env::sinr_vector(rx, band, noise);
    for (int j = 0; j < n; ++j) {
      double interference = 0.0;
      for (int k = 0; k < n; ++k)
        if (k != j && band[k] == band[j]) interference += rx[k];
      worst_sinr = std::max(worst_sinr, rel_err(sinr[j], rx[j] / (interference + noise[j])));
    }

    const double w = uniform(rng, 0.0, 1.0) < 0.5 ? 40e6 : 10e6;
    const double s = sinr[uniform_index(rng, n)];
    const double c = env::achievable_rate(s, w);
    worst_rate = std::max(worst_rate, rel_err(c, w * std::log(1.0 + s) / std::log(2.0)));

    const int load = 1 + static_cast<int>(uniform_index(rng, 60));
    const double t_s = 0.1;
    const double t_ho = std::array{0.0, 0.020, 0.09076}[uniform_index(rng, 3)];
    worst_service = std::max(worst_service, rel_err(env::service_rate(c, load, t_ho, t_s), c / load * (t_s - t_ho) / t_s));

    const int n_bs = 1 + static_cast<int>(uniform_index(rng, 44));
    std::vector<double> utils(n_bs);
    for (auto& u : utils) u = uniform(rng, 0.0, 9.0);
    const double own = utils[uniform_index(rng, n_bs)];
    const double alpha = uniform(rng, 0.0, 1.0);
    double total = 0.0;
    for (double u : utils) total += u;
    worst_reward = std::max(worst_reward, rel_err(env::reward(own, utils, alpha, n_bs),
                                                  alpha * own + (1.0 - alpha) * total / n_bs));
  }
  const double worst = std::max({worst_sinr, worst_rate, worst_service, worst_reward});
  return {worst <= 1e-12, fmt("max rel err sinr %.1e rate %.1e service %.1e reward %.1e (tol 1e-12)", worst_sinr,
                              worst_rate, worst_service, worst_reward)};
}

// ---------------------------------------------------------------------------

Outcome constants_fidelity() {
  const auto c = radio::default_scenario();
  std::vector<std::string> bad;
  auto expect = [&](const char* what, double got, double want) {
    if (got != want) bad.push_back(fmt("%s=%g want %g", what, got, want));
  };
  expect("tx_power_dbm", c.tx_power, 46.0);
  expect("bands", static_cast<double>(c.bands.size()), 2.0);
  if (c.bands.size() == 2) {
    expect("f_high_ghz", c.bands[0].carrier_frequency, 3.7);
    expect("f_low_ghz", c.bands[1].carrier_frequency, 0.7);
    expect("w_high_hz", c.bands[0].bandwidth, 40e6);
    expect("w_low_hz", c.bands[1].bandwidth, 10e6);
  }
  expect("base_stations", c.num_base_stations(), 44.0);
  expect("isd_m", c.inter_site_distance, 500.0);
  expect("noise_dbm_hz", c.noise_psd, -174.0);
  expect("bs_height_m", c.bs_height, 25.0);
  expect("ue_height_m", c.user_height, 1.5);
  expect("slot_s", c.slot_duration, 0.1);
  expect("ho_success_p", c.handover.success_probability, 0.8);
  expect("ho_success_s", c.handover.success_interruption, 0.020);
  expect("ho_failure_s", c.handover.failure_interruption, 0.09076);
  std::string detail = bad.empty() ? "15 values exact" : "";
  for (const auto& b : bad) detail += b + "; ";
  return {bad.empty(), detail};
}

// ---------------------------------------------------------------------------

Outcome ppo_gradient() {
  double worst = 0.0;
  std::size_t coords = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = testing::ppo_gradient_check(seed);
    worst = std::max(worst, r.max_rel_error);
    coords = r.coordinates;
  }
  return {worst < 1e-4, fmt("max rel err %.2e over %zu coordinates x 3 seeds (tol 1e-4)", worst, coords)};
}

Outcome bandit() {
  const double p = testing::bandit_better_arm_probability(1, 200);
  return {p >= 0.95, fmt("P(better arm) = %.4f after 200 updates (need >= 0.95)", p)};
}

// ---------------------------------------------------------------------------
// Desk-scale training shared by the load-balancing and parallel-DT criteria.

struct Desk {
  std::shared_ptr<const radio::ScenarioConfig> scenario;
  std::shared_ptr<const radio::ChannelModel> channel;
  std::shared_ptr<const mobility::MobilitySource> mobility;
  std::vector<int> held_out = {20, 30, 40, 50, 60};
  int slots = 200;

  Desk() {
    auto s = std::make_shared<radio::ScenarioConfig>(radio::desk_scenario());
    mobility::StreetSynthParams sp;
    sp.area = s->area();
    sp.drop_fraction = 0.1;
    mobility = std::make_shared<mobility::MobilitySource>(
        mobility::MobilitySource::map_random_waypoint(mobility::synth_street_graph(5, sp), {}));
    channel = std::make_shared<radio::ChannelModel>(*s);
    scenario = s;
  }

  static std::uint64_t eval_seed(std::uint64_t train_seed) { return 0xE7A1000 + train_seed; }

  eval::EvalReport max_sinr(std::uint64_t train_seed) const {
    return eval::evaluate_held_out([] { return std::make_unique<eval::MaxSinrPolicy>(); }, scenario, channel, mobility,
                                   held_out, slots, eval_seed(train_seed));
  }

  eval::EvalReport learned(const agent::PolicyParameters& p, std::uint64_t train_seed) const {
    const int n = scenario->mask_top_n;
    return eval::evaluate_held_out([&] { return std::make_unique<eval::LearnedPolicy>(p, n, true); }, scenario,
                                   channel, mobility, held_out, slots, eval_seed(train_seed));
  }
};

const Desk& desk() {
  static const Desk d;
  return d;
}

// K environments each collect rollout/K slots, so every K sees the same
// number of samples per update round and the same number of rounds.
trainer::TrainerConfig desk_config(std::uint64_t seed, int k) {
  auto c = trainer::desk_trainer_config();
  c.seed = seed;
  c.parallel_envs = k;
  c.rollout_length = std::max(1, c.rollout_length / k);
  return c;
}

// Trained parameters memoized by (seed, K).
const agent::PolicyParameters& desk_policy(std::uint64_t seed, int k) {
  static std::map<std::pair<std::uint64_t, int>, agent::PolicyParameters> cache;
  const auto key = std::pair{seed, k};
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  const auto t0 = std::chrono::steady_clock::now();
  trainer::Trainer t(desk_config(seed, k), desk().scenario, desk().mobility);
  t.run();
  std::fprintf(stderr, "  trained seed %llu K=%d: %lld samples in %.1f s\n", static_cast<unsigned long long>(seed), k,
               static_cast<long long>(t.samples_seen()),
               std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return cache.emplace(key, t.params()).first->second;
}

Outcome desk_load_balancing() {
  const auto& d = desk();
  double drl_u = 0, drl_p5 = 0, ms_u = 0, ms_p5 = 0;
  std::string per_seed;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto ms = d.max_sinr(seed);
    const auto drl = d.learned(desk_policy(seed, 1), seed);
    drl_u += drl.utility / 3;
    drl_p5 += drl.five_pct_rate / 3;
    ms_u += ms.utility / 3;
    ms_p5 += ms.five_pct_rate / 3;
    per_seed += fmt(" s%llu %.2fx", static_cast<unsigned long long>(seed), drl.five_pct_rate / ms.five_pct_rate);
  }
  const bool pass = drl_u >= ms_u && drl_p5 >= 1.10 * ms_p5;
  return {pass, fmt("utility %.4f vs max-sinr %.4f; 5%%-rate %.3g vs %.3g = %.2fx (need >= 1.10x);%s", drl_u, ms_u,
                    drl_p5, ms_p5, drl_p5 / ms_p5, per_seed.c_str())};
}

double sample_count_std(const trainer::SampleBuffer& b) {
  const auto counts = b.sample_user_counts();
  double s = 0, s2 = 0;
  for (int n : counts) {
    s += n;
    s2 += static_cast<double>(n) * n;
  }
  const double m = s / counts.size();
  return std::sqrt(std::max(0.0, s2 / counts.size() - m * m));
}

Outcome parallel_dt() {
  const auto& d = desk();
  double p5_one = 0, p5_eight = 0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    p5_one += d.learned(desk_policy(seed, 1), seed).five_pct_rate / 3;
    p5_eight += d.learned(desk_policy(seed, 8), seed).five_pct_rate / 3;
  }
  // User-count spread within one update batch, from fresh trainers.
  trainer::Trainer one(desk_config(1, 1), d.scenario, d.mobility);
  trainer::Trainer eight(desk_config(1, 8), d.scenario, d.mobility);
  const double std_one = sample_count_std(one.collect());
  const double std_eight = sample_count_std(eight.collect());
  const bool pass = p5_eight >= p5_one && std_eight > std_one;
  return {pass, fmt("held-out 5%%-rate K=8 %.3g vs K=1 %.3g (%.3fx, need >= 1); batch |U| std K=8 %.2f vs K=1 %.2f",
                    p5_eight, p5_one, p5_eight / p5_one, std_eight, std_one)};
}

// ---------------------------------------------------------------------------
// Budget arithmetic, closed form and by counting a real run with a constant
// population at the default scenario's mean density.

Outcome budget_arithmetic() {
  const double steps = trainer::steps_for_budget(5'000'000, 1, 250.0);
  const bool formula = std::abs(steps - 20000.0) <= 200.0;

  auto s = std::make_shared<radio::ScenarioConfig>(radio::default_scenario());
  Rng rng(17);
  std::vector<mobility::Trajectory> parked;
  for (int i = 0; i < 250; ++i) {
    const double x = uniform(rng, 0.0, s->area_width), y = uniform(rng, 0.0, s->area_height);
    parked.push_back({{{0.0, x, y}, {1e9, x, y}}});
  }
  const auto mob = std::make_shared<mobility::MobilitySource>(mobility::MobilitySource::playback(parked));
  trainer::TrainerConfig c;
  c.sample_budget = 5'000'000 / 100;  // 1/100 scale
  c.rollout_length = 8;
  c.hidden = 8;
  c.ppo.epochs = 1;
  c.ppo.minibatch_size = 4096;
  c.env_options.arrival_rate = 0.0;
  trainer::Trainer t(c, s, mob);
  t.run();
  const double counted = static_cast<double>(t.round()) * c.rollout_length * 100.0;
  const bool run = std::abs(counted - 20000.0) <= 200.0;
  return {formula && run, fmt("closed form %.1f steps; counted run %d users x %d rounds -> %.0f steps at full scale "
                              "(target 20000 +-1%%)",
                              steps, t.workers()[0].env.user_count(), t.round(), counted)};
}

// ---------------------------------------------------------------------------

mobility::Trajectory random_path(Rng& rng, int n, double extent, bool integer) {
  mobility::Trajectory t;
  for (int i = 0; i < n; ++i) {
    double x = uniform(rng, 0.0, extent), y = uniform(rng, 0.0, extent);
    if (integer) {
      x = std::floor(x);
      y = std::floor(y);
    }
    t.points.push_back({static_cast<double>(i), x, y});
  }
  return t;
}

void dtw_paths(const mobility::Trajectory& a, const mobility::Trajectory& b, std::size_t i, std::size_t j,
               double acc, double& best) {
  const double dx = a.points[i].x - b.points[j].x, dy = a.points[i].y - b.points[j].y;
  acc += dx * dx + dy * dy;
  if (i + 1 == a.size() && j + 1 == b.size()) {
    best = std::min(best, acc);
    return;
  }
  if (i + 1 < a.size()) dtw_paths(a, b, i + 1, j, acc, best);
  if (j + 1 < b.size()) dtw_paths(a, b, i, j + 1, acc, best);
  if (i + 1 < a.size() && j + 1 < b.size()) dtw_paths(a, b, i + 1, j + 1, acc, best);
}

Outcome metric_suite() {
  Rng rng(202);
  std::vector<std::string> bad;

  for (int trial = 0; trial < 50; ++trial) {
    const auto t = random_path(rng, 1 + static_cast<int>(uniform_index(rng, 40)), 500.0, false);
    if (eval::edr(t, t) != 0.0 || eval::dtw(t, t) != 0.0) {
      bad.push_back("identity");
      break;
    }
  }

  int dtw_cases = 0;
  for (int la = 1; la <= 6; ++la)
    for (int lb = 1; lb <= 6; ++lb)
      for (int rep = 0; rep < 10; ++rep) {
        const auto a = random_path(rng, la, 20.0, true), b = random_path(rng, lb, 20.0, true);
        double best = std::numeric_limits<double>::infinity();
        dtw_paths(a, b, 0, 0, 0.0, best);
        ++dtw_cases;
        if (eval::dtw(a, b) != best) bad.push_back(fmt("dtw %dx%d", la, lb));
      }

  const std::vector<Vec2> p0 = {{0.0, 0.0}}, p1 = {{1.0, 0.0}};
  const std::vector<double> w = {1.0};
  const double swd = eval::sliced_wasserstein(p0, w, p1, w, 10000, rng);
  if (std::abs(swd - 2.0 / std::numbers::pi) > 0.01) bad.push_back(fmt("swd %.4f", swd));

  const BBox box{{0.0, 0.0}, {1000.0, 1000.0}};
  double worst_sum = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<mobility::Trajectory> set;
    for (int i = 0; i < 1 + trial; ++i) set.push_back(random_path(rng, 5 + 7 * i, 999.0, false));
    worst_sum = std::max(worst_sum, std::abs(eval::heatmap(set, box).total() - 1.0));
  }
  if (worst_sum > 1e-9) bad.push_back(fmt("heatmap sum off by %.1e", worst_sum));

  std::string detail = fmt("identity 0; dtw exact on %d exhaustive cases; swd %.4f vs 2/pi %.4f; heatmap |sum-1| %.1e",
                           dtw_cases, swd, 2.0 / std::numbers::pi, worst_sum);
  for (const auto& b : bad) detail += "; FAILED " + b;
  return {bad.empty(), detail};
}

// ---------------------------------------------------------------------------

std::tuple<std::string, std::string> train_and_eval(int threads) {
  const auto& d = desk();
  trainer::TrainerConfig c = desk_config(9, 3);
  c.sample_budget = 6000;
  c.hidden = 32;
  c.threads = threads;
  trainer::Trainer t(c, d.scenario, d.mobility);
  t.run();
  const auto p = t.params();
  const int n = d.scenario->mask_top_n;
  const std::vector<int> users = {20, 60};
  const auto r = eval::evaluate_held_out([&] { return std::make_unique<eval::LearnedPolicy>(p, n, true); },
                                         d.scenario, d.channel, d.mobility, users, 50, 5);
  return {t.checkpoint_bytes(), eval::report_to_json(r)};
}

Outcome determinism() {
  const auto a = train_and_eval(1);
  const auto b = train_and_eval(1);
  const auto c = train_and_eval(3);
  auto verdict = [](const auto& x, const auto& y) -> std::string {
    const bool ck = std::get<0>(x) == std::get<0>(y), ev = std::get<1>(x) == std::get<1>(y);
    if (ck && ev) return "identical";
    return std::string(ck ? "" : "checkpoint differs ") + (ev ? "" : "report differs");
  };
  const auto runs = verdict(a, b), threads = verdict(a, c);
  return {a == b && a == c, fmt("repeat run %s; 1 vs 3 threads %s (checkpoint %zu bytes + eval report)",
                                runs.c_str(), threads.c_str(), std::get<0>(a).size())};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {"equation_oracles", 5.0, equation_oracles},
      {"constants_fidelity", 0.0, constants_fidelity},
      {"ppo_gradient_check", 30.0, ppo_gradient},
      {"bandit_sanity", 60.0, bandit},
      {"desk_load_balancing", 1800.0, desk_load_balancing},
      {"parallel_dt", 0.0, parallel_dt},
      {"budget_arithmetic", 0.0, budget_arithmetic},
      {"metric_suite", 0.0, metric_suite},
      {"determinism", 0.0, determinism},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  for (const auto& w : wanted)
    if (std::none_of(all.begin(), all.end(), [&](const Criterion& c) { return w == c.name; })) {
      std::fprintf(stderr, "unknown criterion '%s'\n", w.c_str());
      return 2;
    }

  int failed = 0, ran = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.time_limit > 0 && secs > c.time_limit) {
      o.pass = false;
      o.detail += fmt("; over time limit %.0f s", c.time_limit);
    }
    std::printf("%s %-20s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    ++ran;
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%d criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
