#pragma once

#include <functional>
#include <span>
#include <vector>

#include "dtcell/common/geometry.hpp"
#include "dtcell/common/rng.hpp"
#include "dtcell/mobility/trajectory.hpp"

namespace dtcell::eval {

inline constexpr double kDefaultEdrThreshold = 20.0;  // meters
inline constexpr int kDefaultHeatmapSize = 192;

/// Edit distance on real sequences: unit insert/delete/substitute cost, zero
/// cost where corresponding points lie closer than `tau`.
double edr(const mobility::Trajectory& a, const mobility::Trajectory& b, double tau = kDefaultEdrThreshold);

/// Dynamic time warping with squared Euclidean point costs.
double dtw(const mobility::Trajectory& a, const mobility::Trajectory& b);

/// Row-major G x G grid over a bounding box; row 0 holds the smallest y.
struct HeatmapGrid {
  int size = kDefaultHeatmapSize;
  BBox bbox;
  std::vector<double> cells;

  double total() const;
  Vec2 cell_center(int index) const;
};

/// Accumulates one unit of mass per trajectory sample in the containing
/// cell, then normalizes to sum 1. Throws ContractViolation for points
/// outside the box and NumericError when nothing was accumulated.
HeatmapGrid heatmap(std::span<const mobility::Trajectory> trajectories, const BBox& bbox,
                    int size = kDefaultHeatmapSize);

/// Inner product over norms. Throws NumericError on a zero-norm input and
/// ContractViolation on a size mismatch.
double cosine_similarity(const HeatmapGrid& a, const HeatmapGrid& b);

/// Mean over random unit directions of the 1-D Wasserstein-1 distance
/// between the projected cell-center distributions. Throws ContractViolation
/// unless both inputs sum to 1 within 1e-6.
double sliced_wasserstein(const HeatmapGrid& a, const HeatmapGrid& b, int n_projections, Rng& rng);

/// Same distance for weighted point sets (weights must each sum to 1).
double sliced_wasserstein(std::span<const Vec2> pa, std::span<const double> wa, std::span<const Vec2> pb,
                          std::span<const double> wb, int n_projections, Rng& rng);

using TrajectoryMetric = std::function<double(const mobility::Trajectory&, const mobility::Trajectory&)>;

/// For each generated trajectory the minimum metric over the real set,
/// averaged over the generated set.
double min_match_score(std::span<const mobility::Trajectory> generated, std::span<const mobility::Trajectory> real,
                       const TrajectoryMetric& metric);

}  // namespace dtcell::eval
