#include "dtcell/mobility/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dtcell/common/error.hpp"

namespace dtcell::mobility {

namespace {

// Samples closer than this to a corner are dropped so that every emitted
// timestamp survives 6-decimal printing as a distinct value.
constexpr double kTimeGap = 1e-3;

/// Emits a constant-speed polyline: interior samples on the global
/// `dt` grid plus every corner, truncated at `duration`.
class PolylineWriter {
 public:
  PolylineWriter(Vec2 start, double duration, double dt) : pos_(start), duration_(duration), dt_(dt) {
    traj_.points.push_back({0.0, start.x, start.y});
  }

  bool done() const { return t_ >= duration_; }
  Vec2 position() const { return pos_; }

  /// Returns false once the duration is exhausted.
  bool move_to(Vec2 q, double speed) {
    if (done()) return false;
    const double len = distance(pos_, q);
    const double travel = len / speed;
    if (!(travel > kTimeGap)) return true;  // degenerate leg: stay put
    double t_end = t_ + travel;
    const bool truncated = t_end > duration_;
    if (truncated) t_end = duration_;
    auto along = [&](double t) { return pos_ + ((t - t_) * speed / len) * (q - pos_); };
    for (double k = std::floor(t_ / dt_) + 1.0;; k += 1.0) {
      const double ts = k * dt_;
      if (ts >= t_end - kTimeGap) break;
      if (ts <= t_ + kTimeGap) continue;
      const Vec2 p = along(ts);
      traj_.points.push_back({ts, p.x, p.y});
    }
    const Vec2 end = truncated ? along(t_end) : q;
    if (t_end - t_ > kTimeGap) traj_.points.push_back({t_end, end.x, end.y});
    pos_ = end;
    t_ = t_end;
    return !done();
  }

  Trajectory finish() {
    if (t_ < duration_ && duration_ - traj_.points.back().t > kTimeGap)
      traj_.points.push_back({duration_, pos_.x, pos_.y});
    return std::move(traj_);
  }

 private:
  Trajectory traj_;
  Vec2 pos_;
  double t_ = 0.0;
  double duration_;
  double dt_;
};

Vec2 uniform_point(Rng& rng, const BBox& area) {
  return {uniform(rng, area.min.x, area.max.x), uniform(rng, area.min.y, area.max.y)};
}

double leg_speed(Rng& rng, double v_min, double v_max) {
  if (!(v_min > 0.0) || v_max < v_min) throw ConfigError("mobility: need 0 < v_min <= v_max");
  return v_min == v_max ? v_min : uniform(rng, v_min, v_max);
}

double angle_gap(double a, double b) { return std::abs(std::remainder(a - b, 2.0 * std::numbers::pi)); }

struct ArState {
  double speed;
  double heading;
  double mean_heading;
};

void ar_update(ArState& s, const GmParams& p, Rng& rng) {
  const double m = p.memory;
  const double innovation = std::sqrt(std::max(0.0, 1.0 - m * m));
  s.speed = m * s.speed + (1.0 - m) * p.mean_speed + innovation * p.speed_noise * standard_normal(rng);
  s.heading = m * s.heading + (1.0 - m) * s.mean_heading + innovation * p.heading_noise * standard_normal(rng);
}

void check_gm(const GmParams& p) {
  if (!(p.memory >= 0.0 && p.memory <= 1.0)) throw ConfigError("gauss-markov: memory outside [0, 1]");
  if (!(p.dt > 0.0)) throw ConfigError("gauss-markov: dt must be positive");
  if (p.duration < 0.0) throw ConfigError("gauss-markov: negative duration");
}

// Reflect a coordinate into [lo, hi]; returns true when a reflection happened.
bool reflect(double& v, double lo, double hi) {
  bool flipped = false;
  for (int guard = 0; guard < 64 && (v < lo || v > hi); ++guard) {
    v = v < lo ? 2.0 * lo - v : 2.0 * hi - v;
    flipped = !flipped;
  }
  return flipped;
}

}  // namespace

Trajectory rwp_trajectory(Rng& rng, const RwpParams& p) {
  if (p.duration < 0.0 || !(p.sample_interval > 0.0)) throw ConfigError("rwp: invalid duration or sample interval");
  PolylineWriter writer(uniform_point(rng, p.area), p.duration, p.sample_interval);
  while (!writer.done()) {
    const Vec2 waypoint = uniform_point(rng, p.area);
    writer.move_to(waypoint, leg_speed(rng, p.v_min, p.v_max));
  }
  return writer.finish();
}

Trajectory gm_trajectory(Rng& rng, const GmParams& p) {
  check_gm(p);
  Vec2 pos = uniform_point(rng, p.area);
  const double mean_heading = uniform(rng, -std::numbers::pi, std::numbers::pi);
  ArState s{p.mean_speed + p.speed_noise * standard_normal(rng), mean_heading, mean_heading};

  Trajectory traj;
  traj.points.push_back({0.0, pos.x, pos.y});
  double t = 0.0;
  while (t < p.duration) {
    const double step = std::min(p.dt, p.duration - t);
    if (step <= kTimeGap) break;
    ar_update(s, p, rng);
    const double v = std::clamp(s.speed, 0.0, p.max_speed);
    pos = pos + (v * step) * Vec2{std::cos(s.heading), std::sin(s.heading)};
    if (reflect(pos.x, p.area.min.x, p.area.max.x)) {
      s.heading = std::numbers::pi - s.heading;
      s.mean_heading = std::numbers::pi - s.mean_heading;
    }
    if (reflect(pos.y, p.area.min.y, p.area.max.y)) {
      s.heading = -s.heading;
      s.mean_heading = -s.mean_heading;
    }
    t += step;
    traj.points.push_back({t, pos.x, pos.y});
  }
  return traj;
}

Trajectory m_rwp_trajectory(Rng& rng, const StreetGraph& graph, const Adjacency& adjacency, const MapRwpParams& p,
                            std::vector<std::vector<int>>* legs) {
  if (graph.nodes.empty()) throw ConfigError("m-rwp: empty street graph");
  if (p.duration < 0.0 || !(p.sample_interval > 0.0)) throw ConfigError("m-rwp: invalid duration or sample interval");
  const std::size_t n = graph.nodes.size();
  int current = static_cast<int>(uniform_index(rng, n));
  PolylineWriter writer(graph.nodes[current], p.duration, p.sample_interval);
  if (n == 1) return writer.finish();
  while (!writer.done()) {
    int dest = static_cast<int>(uniform_index(rng, n - 1));
    if (dest >= current) ++dest;
    const auto path = shortest_path(adjacency, current, dest);
    if (legs) legs->push_back(path);
    const double speed = leg_speed(rng, p.v_min, p.v_max);
    for (std::size_t k = 1; k < path.size(); ++k)
      if (!writer.move_to(graph.nodes[path[k]], speed)) break;
    current = dest;
  }
  return writer.finish();
}

Trajectory m_gm_trajectory(Rng& rng, const StreetGraph& graph, const Adjacency& adjacency, const GmParams& p) {
  check_gm(p);
  if (graph.edges.empty()) throw ConfigError("m-gm: street graph has no edges");
  const auto& e0 = graph.edges[uniform_index(rng, graph.edges.size())];
  int from = e0.a;
  int to = e0.b;
  if (uniform(rng, 0.0, 1.0) < 0.5) std::swap(from, to);
  double offset = uniform(rng, 0.0, 1.0) * distance(graph.nodes[from], graph.nodes[to]);

  auto direction = [&](int a, int b) {
    const Vec2 d = graph.nodes[b] - graph.nodes[a];
    return std::atan2(d.y, d.x);
  };
  auto where = [&]() {
    const Vec2 a = graph.nodes[from];
    const Vec2 b = graph.nodes[to];
    const double len = distance(a, b);
    return len > 0.0 ? a + (offset / len) * (b - a) : a;
  };

  const double initial_heading = direction(from, to);
  ArState s{p.mean_speed + p.speed_noise * standard_normal(rng), initial_heading, initial_heading};

  Trajectory traj;
  const Vec2 start = where();
  traj.points.push_back({0.0, start.x, start.y});
  double t = 0.0;
  while (t < p.duration) {
    const double step = std::min(p.dt, p.duration - t);
    if (step <= kTimeGap) break;
    ar_update(s, p, rng);
    const double v = std::clamp(s.speed, 0.0, p.max_speed);
    const double travel = v * step;
    double remaining = travel;
    while (remaining > 0.0) {
      const double left = distance(graph.nodes[from], graph.nodes[to]) - offset;
      if (remaining < left) {
        offset += remaining;
        break;
      }
      remaining -= left;
      const double t_node = t + step * (travel - remaining) / travel;
      if (t_node - traj.points.back().t > kTimeGap && t + step - t_node > kTimeGap) {
        const Vec2 node = graph.nodes[to];
        traj.points.push_back({t_node, node.x, node.y});
      }
      // Project the AR heading onto the admissible outgoing streets.
      const auto& nbrs = adjacency[to];
      int next = from;
      double best = std::numeric_limits<double>::infinity();
      for (int w : nbrs) {
        if (w == from && nbrs.size() > 1) continue;
        const double gap = angle_gap(direction(to, w), s.heading);
        if (gap < best) {
          best = gap;
          next = w;
        }
      }
      from = to;
      to = next;
      offset = 0.0;
      // Keep angles unwrapped relative to the mean so the AR(1) blend stays local.
      const double heading =
          s.mean_heading + std::remainder(direction(from, to) - s.mean_heading, 2.0 * std::numbers::pi);
      if (angle_gap(heading, s.mean_heading) > 0.5 * std::numbers::pi) s.mean_heading = heading;
      s.heading = heading;
    }
    t += step;
    const Vec2 pos = where();
    traj.points.push_back({t, pos.x, pos.y});
  }
  return traj;
}

}  // namespace dtcell::mobility
