#pragma once

#include <limits>
#include <vector>

#include "dtcell/common/geometry.hpp"

namespace dtcell::mobility {

struct TrajPoint {
  double t = 0.0;  // seconds
  double x = 0.0;  // meters
  double y = 0.0;

  Vec2 position() const { return {x, y}; }
  friend bool operator==(const TrajPoint&, const TrajPoint&) = default;
};

/// Timestamped 2-D polyline; timestamps strictly increase.
struct Trajectory {
  std::vector<TrajPoint> points;

  bool empty() const { return points.empty(); }
  std::size_t size() const { return points.size(); }
  double start_time() const { return points.front().t; }
  double end_time() const { return points.back().t; }
  double duration() const { return empty() ? 0.0 : end_time() - start_time(); }

  /// Piecewise-linear interpolation, clamped to the end points. At a sample
  /// timestamp the sample itself is returned exactly.
  Vec2 position_at(double t) const;
  /// Copy with timestamps shifted so the first one is zero.
  Trajectory rebased() const;
};

/// Throws ParseError if timestamps do not strictly increase or an implied
/// speed exceeds `v_max` (plus a small relative slack).
void validate_trajectory(const Trajectory& trajectory, double v_max = std::numeric_limits<double>::infinity());

}  // namespace dtcell::mobility
