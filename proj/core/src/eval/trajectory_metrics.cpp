#include "dtcell/eval/trajectory_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dtcell/common/error.hpp"

namespace dtcell::eval {

namespace {

Vec2 point(const mobility::TrajPoint& p) { return {p.x, p.y}; }

void require_non_empty(const mobility::Trajectory& a, const mobility::Trajectory& b, const char* what) {
  if (a.points.empty() || b.points.empty()) throw ContractViolation(std::string(what) + ": empty trajectory");
}

void require_normalized(std::span<const double> w, const char* what) {
  double sum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) throw ContractViolation(std::string(what) + ": negative weight");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw ContractViolation(std::string(what) + ": input is not normalized");
}

// Exact W1 between two weighted atom sets on the line: integral of |F_a - F_b|.
double wasserstein_1d(std::vector<std::pair<double, double>>& atoms) {
  std::sort(atoms.begin(), atoms.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  double diff = 0.0, total = 0.0;
  for (std::size_t i = 0; i + 1 < atoms.size(); ++i) {
    diff += atoms[i].second;
    total += std::abs(diff) * (atoms[i + 1].first - atoms[i].first);
  }
  return total;
}

}  // namespace

double edr(const mobility::Trajectory& a, const mobility::Trajectory& b, double tau) {
  require_non_empty(a, b, "edr");
  const std::size_t n = a.points.size(), m = b.points.size();
  std::vector<double> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<double>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<double>(i);
    const Vec2 p = point(a.points[i - 1]);
    for (std::size_t j = 1; j <= m; ++j) {
      const double sub = distance(p, point(b.points[j - 1])) < tau ? 0.0 : 1.0;
      cur[j] = std::min({prev[j - 1] + sub, prev[j] + 1.0, cur[j - 1] + 1.0});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double dtw(const mobility::Trajectory& a, const mobility::Trajectory& b) {
  require_non_empty(a, b, "dtw");
  const std::size_t n = a.points.size(), m = b.points.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = inf;
    const Vec2 p = point(a.points[i - 1]);
    for (std::size_t j = 1; j <= m; ++j) {
      const double cost = squared_distance(p, point(b.points[j - 1]));
      cur[j] = cost + std::min({prev[j - 1], prev[j], cur[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double HeatmapGrid::total() const {
  double s = 0.0;
  for (double c : cells) s += c;
  return s;
}

Vec2 HeatmapGrid::cell_center(int index) const {
  const int row = index / size, col = index % size;
  return {bbox.min.x + (col + 0.5) * bbox.width() / size, bbox.min.y + (row + 0.5) * bbox.height() / size};
}

HeatmapGrid heatmap(std::span<const mobility::Trajectory> trajectories, const BBox& bbox, int size) {
  if (size < 1) throw ContractViolation("heatmap: grid size must be positive");
  if (!(bbox.width() > 0.0 && bbox.height() > 0.0)) throw ContractViolation("heatmap: degenerate bounding box");
  HeatmapGrid grid;
  grid.size = size;
  grid.bbox = bbox;
  grid.cells.assign(static_cast<std::size_t>(size) * size, 0.0);
  for (const auto& t : trajectories)
    for (const auto& p : t.points) {
      if (!bbox.contains({p.x, p.y}, 1e-9)) throw ContractViolation("heatmap: point outside the bounding box");
      const int col = std::clamp(static_cast<int>((p.x - bbox.min.x) / bbox.width() * size), 0, size - 1);
      const int row = std::clamp(static_cast<int>((p.y - bbox.min.y) / bbox.height() * size), 0, size - 1);
      grid.cells[static_cast<std::size_t>(row) * size + col] += 1.0;
    }
  const double total = grid.total();
  if (!(total > 0.0)) throw NumericError("heatmap: nothing to normalize");
  for (auto& c : grid.cells) c /= total;
  return grid;
}

double cosine_similarity(const HeatmapGrid& a, const HeatmapGrid& b) {
  if (a.cells.size() != b.cells.size()) throw ContractViolation("cosine_similarity: grid size mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    dot += a.cells[i] * b.cells[i];
    na += a.cells[i] * a.cells[i];
    nb += b.cells[i] * b.cells[i];
  }
  if (!(na > 0.0 && nb > 0.0)) throw NumericError("cosine_similarity: zero-norm input");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double sliced_wasserstein(std::span<const Vec2> pa, std::span<const double> wa, std::span<const Vec2> pb,
                          std::span<const double> wb, int n_projections, Rng& rng) {
  if (pa.size() != wa.size() || pb.size() != wb.size())
    throw ContractViolation("sliced_wasserstein: point/weight size mismatch");
  if (n_projections < 1) throw ContractViolation("sliced_wasserstein: need at least one projection");
  require_normalized(wa, "sliced_wasserstein");
  require_normalized(wb, "sliced_wasserstein");
  std::vector<std::pair<double, double>> atoms;
  double sum = 0.0;
  for (int p = 0; p < n_projections; ++p) {
    const double theta = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const Vec2 dir{std::cos(theta), std::sin(theta)};
    atoms.clear();
    for (std::size_t i = 0; i < pa.size(); ++i)
      if (wa[i] > 0.0) atoms.emplace_back(pa[i].x * dir.x + pa[i].y * dir.y, wa[i]);
    for (std::size_t i = 0; i < pb.size(); ++i)
      if (wb[i] > 0.0) atoms.emplace_back(pb[i].x * dir.x + pb[i].y * dir.y, -wb[i]);
    sum += wasserstein_1d(atoms);
  }
  return sum / n_projections;
}

double sliced_wasserstein(const HeatmapGrid& a, const HeatmapGrid& b, int n_projections, Rng& rng) {
  if (a.size != b.size || a.cells.size() != b.cells.size())
    throw ContractViolation("sliced_wasserstein: grid size mismatch");
  std::vector<Vec2> pa, pb;
  std::vector<double> wa, wb;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    if (a.cells[i] != 0.0) {
      pa.push_back(a.cell_center(static_cast<int>(i)));
      wa.push_back(a.cells[i]);
    }
    if (b.cells[i] != 0.0) {
      pb.push_back(b.cell_center(static_cast<int>(i)));
      wb.push_back(b.cells[i]);
    }
  }
  return sliced_wasserstein(pa, wa, pb, wb, n_projections, rng);
}

double min_match_score(std::span<const mobility::Trajectory> generated, std::span<const mobility::Trajectory> real,
                       const TrajectoryMetric& metric) {
  if (generated.empty() || real.empty()) throw ContractViolation("min_match_score: empty trajectory set");
  double total = 0.0;
  for (const auto& g : generated) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : real) best = std::min(best, metric(g, r));
    total += best;
  }
  return total / static_cast<double>(generated.size());
}

}  // namespace dtcell::eval
