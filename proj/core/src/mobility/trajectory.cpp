#include "dtcell/mobility/trajectory.hpp"

#include <algorithm>
#include <string>

#include "dtcell/common/error.hpp"

namespace dtcell::mobility {

Vec2 Trajectory::position_at(double t) const {
  if (points.empty()) throw ContractViolation("position_at on an empty trajectory");
  if (t <= points.front().t) return points.front().position();
  if (t >= points.back().t) return points.back().position();
  const auto it = std::lower_bound(points.begin(), points.end(), t,
                                   [](const TrajPoint& p, double value) { return p.t < value; });
  if (it->t == t) return it->position();
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double f = (t - a.t) / (b.t - a.t);
  return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
}

Trajectory Trajectory::rebased() const {
  Trajectory out = *this;
  if (out.points.empty()) return out;
  const double t0 = out.points.front().t;
  for (auto& p : out.points) p.t -= t0;
  return out;
}

void validate_trajectory(const Trajectory& trajectory, double v_max) {
  const auto& p = trajectory.points;
  for (std::size_t k = 1; k < p.size(); ++k) {
    const double dt = p[k].t - p[k - 1].t;
    if (!(dt > 0.0))
      throw ParseError("trajectory timestamps must strictly increase (point " + std::to_string(k) + ")");
    const double speed = distance(p[k].position(), p[k - 1].position()) / dt;
    if (speed > v_max * (1.0 + 1e-6) + 1e-6)
      throw ParseError("trajectory speed " + std::to_string(speed) + " exceeds limit (point " + std::to_string(k) + ")");
  }
}

}  // namespace dtcell::mobility
