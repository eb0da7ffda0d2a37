#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dtcell/common/rng.hpp"
#include "dtcell/mobility/models.hpp"
#include "dtcell/mobility/street_graph.hpp"
#include "dtcell/mobility/trajectory.hpp"

namespace dtcell::mobility {

enum class MobilityModel { rwp, gm, mrwp, mgm, playback };

MobilityModel parse_mobility_model(const std::string& name);
std::string to_string(MobilityModel model);

/// Parameters shared by the synthetic generators.
struct MobilityParams {
  double v_min = 1.0;
  double v_max = 15.0;
  double duration = 120.0;  // seconds per generated trajectory
  double sample_interval = 1.0;
  double gm_mean_speed = 8.0;
  double gm_memory = 0.8;
  double gm_speed_noise = 2.0;
  double gm_heading_noise = 0.4;
};

/// Produces fresh trajectories for arriving users. Immutable after
/// construction and safe to share across environments.
class MobilitySource {
 public:
  static MobilitySource random_waypoint(const BBox& area, const MobilityParams& params);
  static MobilitySource gauss_markov(const BBox& area, const MobilityParams& params);
  static MobilitySource map_random_waypoint(StreetGraph graph, const MobilityParams& params);
  static MobilitySource map_gauss_markov(StreetGraph graph, const MobilityParams& params);
  /// Replays the given traces (each rebased to start at t = 0), drawn uniformly.
  static MobilitySource playback(std::vector<Trajectory> traces);

  MobilityModel model() const { return model_; }
  Trajectory generate(Rng& rng) const;
  /// Expected lifetime of a generated trajectory, seconds.
  double mean_duration() const;
  const StreetGraph* graph() const { return graph_.get(); }

 private:
  MobilitySource() = default;

  MobilityModel model_ = MobilityModel::rwp;
  BBox area_;
  MobilityParams params_;
  std::shared_ptr<const StreetGraph> graph_;
  std::shared_ptr<const Adjacency> adjacency_;
  std::shared_ptr<const std::vector<Trajectory>> traces_;
};

}  // namespace dtcell::mobility
