#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dtcell/commands.hpp"

using namespace dtcell::cli;

namespace {

void add_mobility_flags(CLI::App* cmd, MobilitySpec& m) {
  cmd->add_option("--mobility", m.model, "rwp | gm | mrwp | mgm | playback")->capture_default_str();
  cmd->add_option("--graph", m.graph, "StreetGraph JSON for mrwp/mgm");
  cmd->add_option("--traces", m.traces, "Trace CSV for playback");
  cmd->add_option("--duration", m.duration, "Seconds per generated trajectory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Digital-twin cellular association simulator"};
  app.require_subcommand(1);
  const std::vector<std::string> args(argv, argv + argc);

  ScenarioInitOptions init;
  auto* scenario = app.add_subcommand("scenario", "Scenario configuration");
  scenario->require_subcommand(1);
  auto* scenario_init_cmd = scenario->add_subcommand("init", "Write a scenario JSON");
  scenario_init_cmd->add_option("--scale", init.scale, "default | desk")->capture_default_str();
  scenario_init_cmd->add_option("--seed", init.seed, "Master seed stored in the config")->capture_default_str();
  scenario_init_cmd->add_option("--out", init.out)->capture_default_str();

  GraphSynthOptions graph;
  auto* graph_cmd = app.add_subcommand("graph", "Street graphs");
  graph_cmd->require_subcommand(1);
  auto* synth = graph_cmd->add_subcommand("synth", "Synthesize a Manhattan street graph over the scenario area");
  synth->add_option("--config", graph.config, "Scenario JSON (default preset if omitted)");
  synth->add_option("--block", graph.block_size, "Block size in meters")->capture_default_str();
  synth->add_option("--drop", graph.drop_fraction, "Fraction of lattice edges removed")->capture_default_str();
  synth->add_option("--seed", graph.seed)->capture_default_str();
  synth->add_option("--out", graph.out)->capture_default_str();
  synth->add_option("--raster", graph.raster_prefix, "Also write <prefix>_c<k>.png map rasters");

  MobilityGenOptions gen;
  auto* mobility = app.add_subcommand("mobility", "Mobility traces");
  mobility->require_subcommand(1);
  auto* gen_cmd = mobility->add_subcommand("gen", "Generate trajectories to a trace CSV");
  gen_cmd->add_option("--config", gen.config, "Scenario JSON (default preset if omitted)");
  add_mobility_flags(gen_cmd, gen.mobility);
  gen_cmd->add_option("--count", gen.count)->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
  gen_cmd->add_option("--out", gen.out)->capture_default_str();

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Parallel digital-twin PPO training");
  train_cmd->add_option("--config", tr.config, "Scenario JSON (default preset if omitted)");
  add_mobility_flags(train_cmd, tr.mobility);
  train_cmd->add_option("--preset", tr.preset, "default | desk training settings")->capture_default_str();
  train_cmd->add_option("--seed", tr.seed)->capture_default_str();
  train_cmd->add_option("--parallel-envs", tr.parallel_envs, "Number of digital-twin environments K")
      ->capture_default_str();
  train_cmd->add_option("--budget", tr.budget, "Total training samples (preset value if omitted)");
  train_cmd->add_option("--rollout", tr.rollout_length, "Slots per collection round (preset value if omitted)");
  train_cmd->add_option("--checkpoint-interval", tr.checkpoint_interval, "Rounds between checkpoints")
      ->capture_default_str();
  train_cmd->add_option("--hidden", tr.hidden)->capture_default_str();
  train_cmd->add_option("--threads", tr.threads, "Worker threads (0: hardware, capped by DT_CELLSIM_THREADS)")
      ->capture_default_str();
  train_cmd->add_option("--disturbance", tr.channel_disturbance, "Relative channel gain disturbance")
      ->capture_default_str();
  train_cmd->add_option("--out", tr.out, "Run directory")->capture_default_str();

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a policy on held-out user densities");
  eval_cmd->add_option("--config", ev.config, "Scenario JSON (default preset if omitted)");
  add_mobility_flags(eval_cmd, ev.mobility);
  eval_cmd->add_option("--policy", ev.policy, "learned | max-sinr")->capture_default_str();
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Weights file or trainer checkpoint");
  eval_cmd->add_option("--users", ev.users, "User counts, comma separated")->delimiter(',');
  eval_cmd->add_option("--slots", ev.slots, "Slots per density")->capture_default_str();
  eval_cmd->add_option("--seed", ev.seed)->capture_default_str();
  eval_cmd->add_flag("--sample", ev.sample, "Sample actions instead of taking the most probable one");
  eval_cmd->add_option("--disturbance", ev.channel_disturbance)->capture_default_str();
  eval_cmd->add_option("--out", ev.out)->capture_default_str();

  TrajMetricsOptions tm;
  auto* tm_cmd = app.add_subcommand("traj-metrics", "Fidelity of generated trajectories against real ones");
  tm_cmd->add_option("--generated", tm.generated)->required();
  tm_cmd->add_option("--real", tm.real)->required();
  tm_cmd->add_option("--config", tm.config, "Scenario JSON whose area bounds the heatmaps");
  tm_cmd->add_option("--tau", tm.tau, "EDR match threshold in meters")->capture_default_str();
  tm_cmd->add_option("--grid", tm.grid, "Heatmap size")->capture_default_str();
  tm_cmd->add_option("--projections", tm.projections, "Sliced Wasserstein directions")->capture_default_str();
  tm_cmd->add_option("--seed", tm.seed)->capture_default_str();
  tm_cmd->add_option("--out", tm.out)->capture_default_str();

  ReportCdfOptions rc;
  auto* report = app.add_subcommand("report", "Reports");
  report->require_subcommand(1);
  auto* cdf = report->add_subcommand("cdf", "Export the rate CDF of an eval report as CSV");
  cdf->add_option("--report", rc.report)->required();
  cdf->add_option("--out", rc.out)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*scenario_init_cmd) scenario_init(init, args);
    if (*synth) graph_synth(graph, args);
    if (*gen_cmd) mobility_gen(gen, args);
    if (*train_cmd) train(tr, args);
    if (*eval_cmd) evaluate(ev, args);
    if (*tm_cmd) traj_metrics(tm, args);
    if (*cdf) report_cdf(rc, args);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
