#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtcell/mobility/mobility_source.hpp"
#include "dtcell/radio/scenario.hpp"

namespace dtcell::cli {

/// Bad flag combinations that CLI11 cannot express; reported with exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MobilitySpec {
  std::string model = "mrwp";
  std::string graph;   // StreetGraph JSON, required by mrwp/mgm
  std::string traces;  // trace CSV, required by playback
  double duration = 120.0;
};

std::shared_ptr<const mobility::MobilitySource> build_mobility(const MobilitySpec& spec,
                                                               const radio::ScenarioConfig& scenario);

/// The scenario from `path`, or the default preset when `path` is empty.
radio::ScenarioConfig load_config(const std::string& path);

struct ScenarioInitOptions {
  std::string scale = "default";
  std::string out = "scenario.json";
  std::uint64_t seed = 1;
};
void scenario_init(const ScenarioInitOptions& o, const std::vector<std::string>& argv);

struct GraphSynthOptions {
  std::string config;
  double block_size = 100.0;
  double drop_fraction = 0.1;
  std::uint64_t seed = 1;
  std::string out = "streets.json";
  std::string raster_prefix;
};
void graph_synth(const GraphSynthOptions& o, const std::vector<std::string>& argv);

struct MobilityGenOptions {
  std::string config;
  MobilitySpec mobility;
  int count = 100;
  std::uint64_t seed = 1;
  std::string out = "traces.csv";
};
void mobility_gen(const MobilityGenOptions& o, const std::vector<std::string>& argv);

struct TrainOptions {
  std::string config;
  MobilitySpec mobility;
  std::string preset = "default";
  std::uint64_t seed = 1;
  int parallel_envs = 1;
  std::int64_t budget = 0;  // 0: preset value
  int rollout_length = 0;   // 0: preset value
  int checkpoint_interval = 10;
  int hidden = 128;
  int threads = 0;
  double channel_disturbance = 0.0;
  std::string out = "run";
};
void train(const TrainOptions& o, const std::vector<std::string>& argv);

struct EvalOptions {
  std::string config;
  MobilitySpec mobility;
  std::string policy = "learned";  // learned | max-sinr
  std::string checkpoint;          // weights file or trainer checkpoint
  std::vector<int> users;          // empty: five counts spread over the range
  int slots = 200;
  std::uint64_t seed = 1;
  bool sample = false;
  double channel_disturbance = 0.0;
  std::string out = "report.json";
};
void evaluate(const EvalOptions& o, const std::vector<std::string>& argv);

struct TrajMetricsOptions {
  std::string generated;
  std::string real;
  std::string config;  // bounding box source; empty: box around both sets
  double tau = 20.0;
  int grid = 192;
  int projections = 1000;
  std::uint64_t seed = 1;
  std::string out = "metrics.csv";
};
void traj_metrics(const TrajMetricsOptions& o, const std::vector<std::string>& argv);

struct ReportCdfOptions {
  std::string report;
  std::string out = "cdf.csv";
};
void report_cdf(const ReportCdfOptions& o, const std::vector<std::string>& argv);

}  // namespace dtcell::cli
