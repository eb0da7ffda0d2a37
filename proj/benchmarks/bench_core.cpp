#include <benchmark/benchmark.h>

#include <algorithm>
#include <memory>
#include <vector>

#include "dtcell/agent/policy.hpp"
#include "dtcell/agent/ppo.hpp"
#include "dtcell/env/link.hpp"
#include "dtcell/env/network_env.hpp"
#include "dtcell/eval/trajectory_metrics.hpp"
#include "dtcell/mobility/mobility_source.hpp"
#include "dtcell/mobility/street_graph.hpp"
#include "dtcell/radio/channel.hpp"
#include "dtcell/radio/scenario.hpp"
#include "support/agent_checks.hpp"

using namespace dtcell;

namespace {

struct World {
  std::shared_ptr<const radio::ScenarioConfig> scenario;
  std::shared_ptr<const radio::ChannelModel> channel;
  std::shared_ptr<const mobility::MobilitySource> mobility;

  explicit World(radio::ScenarioConfig s) {
    mobility::StreetSynthParams sp;
    sp.area = s.area();
    mobility = std::make_shared<mobility::MobilitySource>(
        mobility::MobilitySource::map_random_waypoint(mobility::synth_street_graph(5, sp), {}));
    channel = std::make_shared<radio::ChannelModel>(s);
    scenario = std::make_shared<radio::ScenarioConfig>(std::move(s));
  }
};

const World& full_world() {
  static const World w(radio::default_scenario());
  return w;
}

std::vector<int> strongest(const env::NetworkEnv& e) {
  std::vector<int> a;
  for (const auto& o : e.observations())
    a.push_back(static_cast<int>(std::max_element(o.sinr.begin(), o.sinr.end()) - o.sinr.begin()));
  return a;
}

mobility::Trajectory walk(Rng& rng, int n) {
  mobility::Trajectory t;
  double x = 500, y = 500;
  for (int i = 0; i < n; ++i) {
    x += uniform(rng, -10.0, 10.0);
    y += uniform(rng, -10.0, 10.0);
    t.points.push_back({static_cast<double>(i), x, y});
  }
  return t;
}

}  // namespace

// Full 44-BS network slot under Max-SINR association.
static void BM_EnvStep(benchmark::State& state) {
  const auto& w = full_world();
  env::NetworkEnv e(w.scenario, w.channel, w.mobility);
  e.reset(1, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    const auto actions = strongest(e);
    benchmark::DoNotOptimize(e.step(actions));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EnvStep)->Arg(100)->Arg(250)->Arg(400)->Unit(benchmark::kMicrosecond);

static void BM_ForwardBatch(benchmark::State& state) {
  const auto& w = full_world();
  env::NetworkEnv e(w.scenario, w.channel, w.mobility);
  e.reset(2, static_cast<int>(state.range(0)));
  Rng rng(3);
  const auto params = agent::PolicyParameters::initialized({w.scenario->num_base_stations(), 128}, rng);
  const auto obs = e.observations();
  std::vector<agent::AgentMemory> memory(obs.size(), agent::AgentMemory::zeros(128));
  for (auto _ : state) benchmark::DoNotOptimize(agent::forward_batch(obs, memory, 8, params));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(obs.size()));
}
BENCHMARK(BM_ForwardBatch)->Arg(100)->Arg(250)->Unit(benchmark::kMicrosecond);

// Loss and gradient over `range(0)` sequences of 16 steps.
static void BM_PpoLossGrad(benchmark::State& state) {
  Rng rng(4);
  const auto params = agent::PolicyParameters::initialized({14, 128}, rng);
  const auto segs = testing::random_segments(params, static_cast<int>(state.range(0)), 16, 0.2, rng);
  std::vector<const agent::Segment*> ptrs;
  for (const auto& s : segs) ptrs.push_back(&s);
  std::vector<double> grad;
  for (auto _ : state) benchmark::DoNotOptimize(agent::ppo_loss(params, ptrs, agent::PpoHyper{}, &grad));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 16);
}
BENCHMARK(BM_PpoLossGrad)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_Sinr(benchmark::State& state) {
  Rng rng(5);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> rx(n), noise(n, 1e-13);
  std::vector<int> band(n);
  for (std::size_t j = 0; j < n; ++j) {
    rx[j] = uniform(rng, 1e-14, 1e-6);
    band[j] = static_cast<int>(j % 2);
  }
  for (auto _ : state) benchmark::DoNotOptimize(env::sinr_vector(rx, band, noise));
}
BENCHMARK(BM_Sinr)->Arg(14)->Arg(44);

static void BM_Dtw(benchmark::State& state) {
  Rng rng(6);
  const auto a = walk(rng, static_cast<int>(state.range(0))), b = walk(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eval::dtw(a, b));
}
BENCHMARK(BM_Dtw)->Arg(120)->Arg(600);

static void BM_Edr(benchmark::State& state) {
  Rng rng(7);
  const auto a = walk(rng, static_cast<int>(state.range(0))), b = walk(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eval::edr(a, b));
}
BENCHMARK(BM_Edr)->Arg(120)->Arg(600);

BENCHMARK_MAIN();
