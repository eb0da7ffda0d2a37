#include "dtcell/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include "dtcell/agent/weights_io.hpp"
#include "dtcell/common/binary_io.hpp"
#include "dtcell/eval/evaluate.hpp"
#include "dtcell/eval/rate_metrics.hpp"
#include "dtcell/eval/trajectory_metrics.hpp"
#include "dtcell/manifest.hpp"
#include "dtcell/mobility/models.hpp"
#include "dtcell/mobility/raster.hpp"
#include "dtcell/mobility/street_graph.hpp"
#include "dtcell/mobility/trace_io.hpp"
#include "dtcell/radio/channel.hpp"
#include "dtcell/trainer/trainer.hpp"

namespace dtcell::cli {

namespace fs = std::filesystem;

namespace {

std::string manifest_path_for(const std::string& out) { return out + ".manifest.json"; }

void ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

agent::PolicyParameters load_policy(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.rfind("DTCK", 0) == 0) return trainer::params_from_checkpoint(bytes);
  return agent::decode_weights(bytes);
}

BBox bounding_box(const std::vector<mobility::Trajectory>& a, const std::vector<mobility::Trajectory>& b) {
  BBox box{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
           {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
  for (const auto* set : {&a, &b})
    for (const auto& t : *set)
      for (const auto& p : t.points) {
        box.min = {std::min(box.min.x, p.x), std::min(box.min.y, p.y)};
        box.max = {std::max(box.max.x, p.x), std::max(box.max.y, p.y)};
      }
  if (!(box.max.x >= box.min.x)) throw UsageError("traj-metrics: both trace files are empty");
  // Degenerate extents still need a positive cell size.
  if (box.max.x == box.min.x) box.max.x += 1.0;
  if (box.max.y == box.min.y) box.max.y += 1.0;
  return box;
}

}  // namespace

radio::ScenarioConfig load_config(const std::string& path) {
  return path.empty() ? radio::default_scenario() : radio::load_scenario(path);
}

std::shared_ptr<const mobility::MobilitySource> build_mobility(const MobilitySpec& spec,
                                                               const radio::ScenarioConfig& scenario) {
  using mobility::MobilityModel;
  using mobility::MobilitySource;
  MobilityModel model;
  try {
    model = mobility::parse_mobility_model(spec.model);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  mobility::MobilityParams params;
  params.duration = spec.duration;
  switch (model) {
    case MobilityModel::rwp:
      return std::make_shared<MobilitySource>(MobilitySource::random_waypoint(scenario.area(), params));
    case MobilityModel::gm:
      return std::make_shared<MobilitySource>(MobilitySource::gauss_markov(scenario.area(), params));
    case MobilityModel::mrwp:
    case MobilityModel::mgm: {
      if (spec.graph.empty()) throw UsageError("--mobility " + spec.model + " needs --graph <streets.json>");
      auto graph = mobility::load_street_graph(spec.graph);
      return std::make_shared<MobilitySource>(model == MobilityModel::mrwp
                                                  ? MobilitySource::map_random_waypoint(std::move(graph), params)
                                                  : MobilitySource::map_gauss_markov(std::move(graph), params));
    }
    case MobilityModel::playback:
      if (spec.traces.empty()) throw UsageError("--mobility playback needs --traces <traces.csv>");
      return std::make_shared<MobilitySource>(MobilitySource::playback(mobility::load_traces(spec.traces)));
  }
  throw UsageError("unknown mobility model");
}

void scenario_init(const ScenarioInitOptions& o, const std::vector<std::string>& argv) {
  radio::ScenarioConfig c;
  if (o.scale == "default")
    c = radio::default_scenario();
  else if (o.scale == "desk")
    c = radio::desk_scenario();
  else
    throw UsageError("--scale must be default or desk");
  c.master_seed = o.seed;
  ensure_parent(o.out);
  radio::save_scenario(c, o.out);
  RunManifest m("scenario init", argv, o.seed);
  m.set_config(radio::scenario_to_json(c), o.out);
  m.add_artifact(o.out);
  m.write(manifest_path_for(o.out));
}

void graph_synth(const GraphSynthOptions& o, const std::vector<std::string>& argv) {
  const auto scenario = load_config(o.config);
  mobility::StreetSynthParams p;
  p.area = scenario.area();
  p.block_size = o.block_size;
  p.drop_fraction = o.drop_fraction;
  const auto graph = mobility::synth_street_graph(o.seed, p);
  ensure_parent(o.out);
  mobility::save_street_graph(graph, o.out);
  RunManifest m("graph synth", argv, o.seed);
  m.set_config(radio::scenario_to_json(scenario), o.config);
  m.add_artifact(o.out);
  if (!o.raster_prefix.empty()) {
    ensure_parent(o.raster_prefix);
    for (const auto& f : mobility::write_raster_pngs(mobility::rasterize_graph(graph, p.area), o.raster_prefix))
      m.add_artifact(f);
  }
  m.write(manifest_path_for(o.out));
}

void mobility_gen(const MobilityGenOptions& o, const std::vector<std::string>& argv) {
  if (o.count < 0) throw UsageError("--count must be non-negative");
  const auto scenario = load_config(o.config);
  const auto source = build_mobility(o.mobility, scenario);
  Rng rng = make_rng(o.seed, 0x4D0B);
  std::vector<mobility::Trajectory> trajectories;
  trajectories.reserve(o.count);
  for (int i = 0; i < o.count; ++i) trajectories.push_back(source->generate(rng));
  ensure_parent(o.out);
  mobility::save_traces(trajectories, o.out);
  RunManifest m("mobility gen", argv, o.seed);
  m.set_config(radio::scenario_to_json(scenario), o.config);
  m.add_artifact(o.out);
  m.write(manifest_path_for(o.out));
}

void train(const TrainOptions& o, const std::vector<std::string>& argv) {
  auto scenario = std::make_shared<radio::ScenarioConfig>(load_config(o.config));
  trainer::TrainerConfig c;
  if (o.preset == "desk")
    c = trainer::desk_trainer_config();
  else if (o.preset != "default")
    throw UsageError("--preset must be default or desk");
  c.parallel_envs = o.parallel_envs;
  if (o.budget > 0) c.sample_budget = o.budget;
  if (o.rollout_length > 0) c.rollout_length = o.rollout_length;
  c.checkpoint_interval = o.checkpoint_interval;
  c.checkpoint_dir = (fs::path(o.out) / "checkpoints").string();
  c.seed = o.seed;
  c.hidden = o.hidden;
  c.threads = o.threads;
  c.env_options.channel_disturbance = o.channel_disturbance;
  trainer::validate(c);

  fs::create_directories(o.out);
  const auto out = fs::path(o.out);
  std::ofstream stats(out / "stats.jsonl");
  trainer::Trainer t(c, scenario, build_mobility(o.mobility, *scenario));
  t.set_stats_stream(&stats);
  t.run([&](const trainer::CurvePoint& p) {
    std::fprintf(stderr, "round %d  samples %lld  utility %.4f  entropy %.3f\n", p.round,
                 static_cast<long long>(p.samples_seen), p.mean_utility, p.entropy);
  });
  stats.close();

  RunManifest m("train", argv, o.seed);
  m.set_config(radio::scenario_to_json(*scenario), o.config);
  const auto curve = (out / "curve.csv").string();
  const auto weights = (out / "weights.bin").string();
  const auto final_ckpt = (out / "final.ckpt").string();
  trainer::save_curve_csv(curve, t.curve());
  agent::save_weights(t.params(), weights);
  t.save_checkpoint(final_ckpt);
  for (const auto& p : {curve, weights, final_ckpt, (out / "stats.jsonl").string()}) m.add_artifact(p);
  for (const auto& p : t.checkpoint_paths()) m.add_artifact(p);
  m.write((out / "manifest.json").string());
}

void evaluate(const EvalOptions& o, const std::vector<std::string>& argv) {
  auto scenario = std::make_shared<radio::ScenarioConfig>(load_config(o.config));
  const auto channel = std::make_shared<radio::ChannelModel>(*scenario);
  const auto mobility = build_mobility(o.mobility, *scenario);
  auto users = o.users;
  if (users.empty()) users = trainer::spread_user_counts(scenario->user_count_range, 5);

  eval::PolicyFactory factory;
  if (o.policy == "max-sinr") {
    factory = [] { return std::make_unique<eval::MaxSinrPolicy>(); };
  } else if (o.policy == "learned") {
    if (o.checkpoint.empty()) throw UsageError("--policy learned needs --checkpoint");
    auto params = load_policy(o.checkpoint);
    if (params.shape().num_bs != scenario->num_base_stations())
      throw UsageError("checkpoint was trained for a different number of base stations");
    const int top_n = scenario->mask_top_n;
    const bool greedy = !o.sample;
    const auto seed = derive_seed(o.seed, 0xACE);
    factory = [params, top_n, greedy, seed] { return std::make_unique<eval::LearnedPolicy>(params, top_n, greedy, seed); };
  } else {
    throw UsageError("--policy must be learned or max-sinr");
  }
  env::EnvOptions options;
  options.channel_disturbance = o.channel_disturbance;
  const auto report = eval::evaluate_held_out(factory, scenario, channel, mobility, users, o.slots, o.seed, options);
  ensure_parent(o.out);
  write_file_bytes(o.out, eval::report_to_json(report));
  std::printf("five_pct_rate %.6g  utility %.6f  handover_per_user_slot %.6f\n", report.five_pct_rate, report.utility,
              report.handover_per_user_slot);

  RunManifest m("eval", argv, o.seed);
  m.set_config(radio::scenario_to_json(*scenario), o.config);
  m.add_artifact(o.out);
  m.write(manifest_path_for(o.out));
}

void traj_metrics(const TrajMetricsOptions& o, const std::vector<std::string>& argv) {
  const auto gen = mobility::load_traces(o.generated);
  const auto real = mobility::load_traces(o.real);
  if (gen.empty() || real.empty()) throw UsageError("traj-metrics: both trace files need at least one trajectory");
  const BBox box = o.config.empty() ? bounding_box(gen, real) : load_config(o.config).area();

  const double tau = o.tau;
  const double edr = eval::min_match_score(gen, real, [tau](const auto& a, const auto& b) { return eval::edr(a, b, tau); });
  const double dtw = eval::min_match_score(gen, real, [](const auto& a, const auto& b) { return eval::dtw(a, b); });
  const auto hg = eval::heatmap(gen, box, o.grid);
  const auto hr = eval::heatmap(real, box, o.grid);
  Rng rng = make_rng(o.seed, 0x5D);
  const double cosine = eval::cosine_similarity(hg, hr);
  const double swd = eval::sliced_wasserstein(hg, hr, o.projections, rng);

  ensure_parent(o.out);
  std::ofstream out(o.out);
  if (!out) throw std::runtime_error("cannot write " + o.out);
  out.precision(17);
  out << "metric,value\n"
      << "edr_min_match," << edr << "\n"
      << "dtw_min_match," << dtw << "\n"
      << "heatmap_cosine," << cosine << "\n"
      << "heatmap_swd," << swd << "\n";
  out.close();

  RunManifest m("traj-metrics", argv, o.seed);
  m.set_config(read_file_bytes(o.generated) + read_file_bytes(o.real));
  m.add_artifact(o.out);
  m.write(manifest_path_for(o.out));
}

void report_cdf(const ReportCdfOptions& o, const std::vector<std::string>& argv) {
  const auto report = eval::report_from_json(read_file_bytes(o.report));
  ensure_parent(o.out);
  std::ofstream out(o.out);
  if (!out) throw std::runtime_error("cannot write " + o.out);
  out.precision(17);
  out << "rate_bps,p\n";
  for (const auto& [rate, p] : report.cdf) out << rate << ',' << p << '\n';
  out.close();

  RunManifest m("report cdf", argv, 0);
  m.set_config(read_file_bytes(o.report), o.report);
  m.add_artifact(o.out);
  m.write(manifest_path_for(o.out));
}

}  // namespace dtcell::cli
