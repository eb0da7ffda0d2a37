#pragma once

#include <limits>
#include <vector>

#include "dtcell/common/geometry.hpp"
#include "dtcell/common/rng.hpp"
#include "dtcell/mobility/street_graph.hpp"
#include "dtcell/mobility/trajectory.hpp"

namespace dtcell::mobility {

/// Random waypoint. Each leg heads to a uniform waypoint in `area` at a speed
/// drawn from [v_min, v_max]. Samples fall on the global `sample_interval`
/// grid; leg corners are always emitted, so consecutive points share a leg.
struct RwpParams {
  BBox area;
  double v_min = 1.0;
  double v_max = 15.0;
  double duration = 120.0;
  double sample_interval = 1.0;
};
Trajectory rwp_trajectory(Rng& rng, const RwpParams& params);

/// Gauss-Markov mobility with first-order autoregressive speed and heading:
///   s' = m*s + (1-m)*mean + sqrt(1-m^2)*noise*xi
/// and the same recursion for heading around a per-trajectory mean heading.
/// The initial speed is drawn from the stationary law N(mean, noise^2).
/// Users reflect off the area boundary.
struct GmParams {
  BBox area;
  double mean_speed = 8.0;
  double memory = 0.8;
  double speed_noise = 2.0;
  double heading_noise = 0.4;  // rad
  double max_speed = std::numeric_limits<double>::infinity();
  double duration = 120.0;
  double dt = 1.0;
};
Trajectory gm_trajectory(Rng& rng, const GmParams& params);

/// Map-restricted random waypoint: destinations are graph nodes and each leg
/// follows `shortest_path`. `legs`, when given, receives each leg's node path.
struct MapRwpParams {
  double v_min = 1.0;
  double v_max = 15.0;
  double duration = 120.0;
  double sample_interval = 1.0;
};
Trajectory m_rwp_trajectory(Rng& rng, const StreetGraph& graph, const Adjacency& adjacency,
                            const MapRwpParams& params, std::vector<std::vector<int>>* legs = nullptr);

/// Map-restricted Gauss-Markov: the AR(1) speed drives motion along the
/// current edge; at each node the next edge is the one whose direction is
/// closest to the AR(1) heading (no U-turn unless at a dead end), and the
/// heading snaps to that edge. The `area` field of `params` is unused.
Trajectory m_gm_trajectory(Rng& rng, const StreetGraph& graph, const Adjacency& adjacency, const GmParams& params);

}  // namespace dtcell::mobility
