#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <queue>
#include <set>

#include "dtcell/common/error.hpp"
#include "dtcell/mobility/mobility_source.hpp"
#include "dtcell/mobility/models.hpp"
#include "dtcell/mobility/population.hpp"
#include "dtcell/mobility/raster.hpp"
#include "dtcell/mobility/street_graph.hpp"
#include "dtcell/mobility/trace_io.hpp"
#include "dtcell/mobility/trajectory.hpp"

using namespace dtcell;
using namespace dtcell::mobility;
using Catch::Approx;

namespace {

StreetSynthParams lattice(double w, double h, double drop = 0.0) {
  StreetSynthParams p;
  p.area = {{0, 0}, {w, h}};
  p.drop_fraction = drop;
  return p;
}

// Unit-weight Dijkstra over an edge list; independent of the BFS under test.
std::vector<int> dijkstra_hops(int n, const std::vector<StreetEdge>& edges, int src) {
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : edges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  std::vector<int> dist(n, -1);
  using Item = std::pair<int, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  std::vector<int> best(n, INT32_MAX);
  best[src] = 0;
  pq.push({0, src});
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (dist[u] >= 0) continue;
    dist[u] = d;
    for (int v : adj[u])
      if (d + 1 < best[v]) {
        best[v] = d + 1;
        pq.push({d + 1, v});
      }
  }
  return dist;
}

bool has_edge(const StreetGraph& g, int a, int b) {
  return std::any_of(g.edges.begin(), g.edges.end(),
                     [&](const StreetEdge& e) { return (e.a == a && e.b == b) || (e.a == b && e.b == a); });
}

double max_speed(const Trajectory& t) {
  double v = 0.0;
  for (std::size_t k = 1; k < t.points.size(); ++k) {
    const auto& a = t.points[k - 1];
    const auto& b = t.points[k];
    v = std::max(v, std::hypot(b.x - a.x, b.y - a.y) / (b.t - a.t));
  }
  return v;
}

}  // namespace

TEST_CASE("street lattice counting, determinism and connectivity") {
  const auto full = synth_street_graph(1, lattice(1000.0, 700.0));
  CHECK(full.nodes.size() == 11 * 8);
  CHECK(full.edges.size() == 10 * 8 + 11 * 7);
  const auto again = synth_street_graph(1, lattice(1000.0, 700.0));
  CHECK(street_graph_to_json(again) == street_graph_to_json(full));

  int retained = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto g = synth_street_graph(seed, lattice(1000.0, 1000.0, 0.3));
    if (g.nodes.size() * 2 >= 121) ++retained;
    const auto adj = build_adjacency(g);
    for (int v = 1; v < static_cast<int>(g.nodes.size()); ++v) REQUIRE_NOTHROW(shortest_path(adj, 0, v));
  }
  CHECK(retained == 100);
  CHECK_THROWS_AS(synth_street_graph(1, lattice(1000.0, 1000.0, 0.6)), ConfigError);
  CHECK_THROWS_AS(synth_street_graph(1, lattice(50.0, 50.0)), ConfigError);
}

TEST_CASE("street graph JSON round-trip and schema errors") {
  const auto g = synth_street_graph(3, lattice(500.0, 500.0, 0.2));
  const auto back = street_graph_from_json(street_graph_to_json(g));
  CHECK(back.nodes.size() == g.nodes.size());
  CHECK(street_graph_to_json(back) == street_graph_to_json(g));
  CHECK_THROWS_AS(street_graph_from_json("{\"nodes\": [[0,0]], \"edges\": [[0, 5, 0]]}"), ParseError);
  CHECK_THROWS_AS(street_graph_from_json("[1,2]"), ParseError);
}

TEST_CASE("shortest path basics") {
  StreetGraph chain;
  for (int i = 0; i < 5; ++i) chain.nodes.push_back({i * 10.0, 0.0});
  for (int i = 0; i < 4; ++i) chain.edges.push_back({i, i + 1, 0});
  CHECK(shortest_path(chain, 2, 2) == std::vector<int>{2});
  CHECK(shortest_path(chain, 0, 4) == std::vector<int>{0, 1, 2, 3, 4});
  chain.nodes.push_back({100.0, 100.0});
  CHECK_THROWS_AS(shortest_path(chain, 0, 5), LookupError);
}

TEST_CASE("BFS hop counts agree with Dijkstra on random graphs") {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    StreetGraph g;
    const int n = 50;
    for (int i = 0; i < n; ++i) g.nodes.push_back({uniform(rng, 0, 100), uniform(rng, 0, 100)});
    std::set<std::pair<int, int>> seen;
    for (int k = 0; k < 90; ++k) {
      int a = static_cast<int>(uniform_index(rng, n)), b = static_cast<int>(uniform_index(rng, n));
      if (a == b || !seen.insert({std::min(a, b), std::max(a, b)}).second) continue;
      g.edges.push_back({a, b, 0});
    }
    const auto adj = build_adjacency(g);
    const auto dist = dijkstra_hops(n, g.edges, 0);
    for (int v = 0; v < n; ++v) {
      if (dist[v] < 0) {
        CHECK_THROWS_AS(shortest_path(adj, 0, v), LookupError);
        continue;
      }
      const auto path = shortest_path(adj, 0, v);
      REQUIRE(static_cast<int>(path.size()) - 1 == dist[v]);
      CHECK(path.front() == 0);
      CHECK(path.back() == v);
      for (std::size_t k = 1; k < path.size(); ++k) CHECK(has_edge(g, path[k - 1], path[k]));
    }
  }
}

TEST_CASE("rasterization") {
  const BBox box{{0, 0}, {960, 960}};
  const auto empty = rasterize_graph(StreetGraph{}, box);
  CHECK(std::all_of(empty.cells.begin(), empty.cells.end(), [](auto c) { return c == 0; }));
  CHECK(empty.cells.size() == 3u * 192 * 192);

  StreetGraph mid;
  mid.nodes = {{0, 480}, {960, 480}};
  mid.edges = {{0, 1, 1}};
  const auto r = rasterize_graph(mid, box);
  CHECK(r.active_cells(0) == 0);
  CHECK(r.active_cells(2) == 0);
  REQUIRE(r.active_cells(1) == 192);
  std::set<int> rows;
  for (int row = 0; row < 192; ++row)
    for (int col = 0; col < 192; ++col)
      if (r.at(1, row, col)) rows.insert(row);
  CHECK(rows.size() == 1);

  const auto g = synth_street_graph(4, lattice(960.0, 960.0, 0.2));
  const auto multi = rasterize_graph(g, box);
  auto blind = g;
  for (auto& e : blind.edges) e.road_class = 0;
  const auto single = rasterize_graph(blind, box, 1);
  for (int row = 0; row < 192; ++row)
    for (int col = 0; col < 192; ++col) {
      const bool any = multi.at(0, row, col) || multi.at(1, row, col) || multi.at(2, row, col);
      REQUIRE(any == (single.at(0, row, col) != 0));
    }
  CHECK(rasterize_graph(g, box).cells == multi.cells);

  const auto dir = std::filesystem::temp_directory_path() / "dtcell_raster_test";
  std::filesystem::create_directories(dir);
  const auto prefix = (dir / "map").string();
  const auto files = write_raster_pngs(multi, prefix);
  CHECK(files.size() == 3);
  CHECK(std::filesystem::exists(prefix + "_c2.png"));
  const auto loaded = read_raster_pngs(prefix, 3, box);
  CHECK(loaded.cells == multi.cells);
  std::filesystem::remove_all(dir);
}

TEST_CASE("trajectory interpolation and validation") {
  Trajectory t{{{0.0, 0.0, 0.0}, {2.0, 10.0, 0.0}, {3.0, 10.0, 5.0}}};
  CHECK(t.position_at(0.0) == Vec2{0.0, 0.0});
  CHECK(t.position_at(2.0) == Vec2{10.0, 0.0});
  CHECK(t.position_at(1.0) == Vec2{5.0, 0.0});
  CHECK(t.position_at(2.5).y == Approx(2.5));
  CHECK(t.position_at(-1.0) == Vec2{0.0, 0.0});
  CHECK(t.position_at(9.0) == Vec2{10.0, 5.0});
  CHECK_NOTHROW(validate_trajectory(t, 5.0));
  CHECK_THROWS_AS(validate_trajectory(t, 4.0), ParseError);
  Trajectory bad{{{0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}}};
  CHECK_THROWS_AS(validate_trajectory(bad), ParseError);
  const auto shifted = Trajectory{{{5.0, 1.0, 1.0}, {6.0, 2.0, 1.0}}}.rebased();
  CHECK(shifted.start_time() == 0.0);
  CHECK(shifted.end_time() == 1.0);
}

TEST_CASE("random waypoint stays inside and respects the speed range") {
  Rng rng(21);
  RwpParams p;
  p.area = {{0, 0}, {800, 500}};
  p.duration = 0.0;
  CHECK(rwp_trajectory(rng, p).size() == 1);
  p.duration = 300.0;
  for (int i = 0; i < 50; ++i) {
    const auto t = rwp_trajectory(rng, p);
    CHECK(t.end_time() == Approx(300.0));
    for (std::size_t k = 0; k < t.points.size(); ++k) {
      REQUIRE(p.area.contains(t.points[k].position(), 1e-9));
      if (k == 0) continue;
      const auto& a = t.points[k - 1];
      const auto& b = t.points[k];
      const double v = std::hypot(b.x - a.x, b.y - a.y) / (b.t - a.t);
      REQUIRE(v >= p.v_min - 1e-6);
      REQUIRE(v <= p.v_max + 1e-6);
    }
  }
}

TEST_CASE("Gauss-Markov statistics") {
  Rng rng(31);
  GmParams p;
  p.area = {{-1e7, -1e7}, {1e7, 1e7}};
  p.memory = 1.0;
  p.speed_noise = 0.0;
  p.heading_noise = 0.0;
  p.duration = 50.0;
  const auto line = gm_trajectory(rng, p);
  const Vec2 d0 = line.points[1].position() - line.points[0].position();
  for (std::size_t k = 2; k < line.points.size(); ++k) {
    const Vec2 d = line.points[k].position() - line.points[k - 1].position();
    CHECK(d.x == Approx(d0.x).margin(1e-6));
    CHECK(d.y == Approx(d0.y).margin(1e-6));
  }

  auto speeds = [&](double memory) {
    GmParams q = p;
    q.memory = memory;
    q.speed_noise = 2.0;
    q.heading_noise = 0.4;
    q.duration = 10000.0;
    const auto t = gm_trajectory(rng, q);
    std::vector<double> v;
    for (std::size_t k = 1; k < t.points.size(); ++k)
      v.push_back(distance(t.points[k].position(), t.points[k - 1].position()));
    return v;
  };
  auto mean_var = [](const std::vector<double>& v) {
    double s = 0.0, s2 = 0.0;
    for (double x : v) {
      s += x;
      s2 += x * x;
    }
    const double m = s / v.size();
    return std::pair{m, s2 / v.size() - m * m};
  };
  const auto [m0, v0] = mean_var(speeds(0.0));
  CHECK(m0 == Approx(8.0).margin(0.1));
  CHECK(v0 == Approx(4.0).margin(0.3));
  const auto [m9, v9] = mean_var(speeds(0.7));
  CHECK(m9 == Approx(8.0).margin(0.2));
  CHECK(v9 == Approx(4.0).margin(0.6));

  GmParams box = p;
  box.area = {{0, 0}, {300, 200}};
  box.memory = 0.8;
  box.speed_noise = 2.0;
  box.heading_noise = 0.4;
  box.duration = 2000.0;
  const auto bounded = gm_trajectory(rng, box);
  for (const auto& pt : bounded.points) REQUIRE(box.area.contains(pt.position(), 1e-9));
}

TEST_CASE("map-restricted models stay on streets") {
  Rng rng(41);
  const auto g = synth_street_graph(9, lattice(1000.0, 1000.0, 0.25));
  const auto adj = build_adjacency(g);
  MapRwpParams p;
  p.duration = 400.0;
  for (int i = 0; i < 20; ++i) {
    std::vector<std::vector<int>> legs;
    const auto t = m_rwp_trajectory(rng, g, adj, p, &legs);
    for (const auto& pt : t.points) REQUIRE(distance_to_graph(g, pt.position()) < 1e-6);
    CHECK(max_speed(t) <= p.v_max + 1e-6);
    for (const auto& leg : legs) CHECK(leg == shortest_path(adj, leg.front(), leg.back()));
  }
  GmParams gp;
  gp.duration = 400.0;
  for (int i = 0; i < 20; ++i) {
    const auto t = m_gm_trajectory(rng, g, adj, gp);
    CHECK_NOTHROW(validate_trajectory(t));
    for (const auto& pt : t.points) REQUIRE(distance_to_graph(g, pt.position()) < 1e-6);
  }

  StreetGraph one;
  one.nodes = {{0, 0}, {100, 0}};
  one.edges = {{0, 1, 0}};
  const auto oadj = build_adjacency(one);
  p.duration = 200.0;
  const auto osc = m_rwp_trajectory(rng, one, oadj, p);
  bool left = false, right = false;
  for (const auto& pt : osc.points) {
    REQUIRE(pt.y == 0.0);
    REQUIRE(pt.x >= 0.0);
    REQUIRE(pt.x <= 100.0);
    left = left || pt.x == 0.0;
    right = right || pt.x == 100.0;
  }
  CHECK((left && right));
}

TEST_CASE("trace CSV round-trip and errors") {
  CHECK(traces_from_csv("traj_id,t_s,x_m,y_m\n").empty());
  CHECK(traces_to_csv({}) == "traj_id,t_s,x_m,y_m\n");

  Rng rng(51);
  std::vector<Trajectory> trajs;
  RwpParams p;
  p.area = {{0, 0}, {2000, 2000}};
  p.duration = 60.0;
  for (int i = 0; i < 100; ++i) trajs.push_back(rwp_trajectory(rng, p));
  const auto back = traces_from_csv(traces_to_csv(trajs));
  REQUIRE(back.size() == trajs.size());
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    REQUIRE(back[i].size() == trajs[i].size());
    for (std::size_t k = 0; k < trajs[i].size(); ++k) {
      CHECK(std::abs(back[i].points[k].x - trajs[i].points[k].x) <= 1e-6);
      CHECK(std::abs(back[i].points[k].y - trajs[i].points[k].y) <= 1e-6);
      CHECK(std::abs(back[i].points[k].t - trajs[i].points[k].t) <= 1e-6);
    }
  }

  const std::string decreasing = "traj_id,t_s,x_m,y_m\n0,0.0,1,1\n0,1.0,2,2\n0,0.5,3,3\n";
  try {
    traces_from_csv(decreasing);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  CHECK_THROWS_AS(traces_from_csv("traj_id,t_s,x_m,y_m\n0,0.0,1\n"), ParseError);
  CHECK_THROWS_AS(traces_from_csv("id,t,x,y\n"), ParseError);
  CHECK_THROWS_AS(traces_from_csv("traj_id,t_s,x_m,y_m\n0,abc,1,1\n"), ParseError);
}

TEST_CASE("checked-in trace fixture loads and validates") {
  const auto trajs = load_traces(std::string(DTCELL_FIXTURE_DIR) + "/desk_mrwp_traces.csv");
  CHECK(trajs.size() >= 10);
  const auto graph = load_street_graph(std::string(DTCELL_FIXTURE_DIR) + "/desk_streets.json");
  for (const auto& t : trajs) {
    CHECK_NOTHROW(validate_trajectory(t, 15.0 + 1e-3));
    for (const auto& pt : t.points) REQUIRE(distance_to_graph(graph, pt.position()) < 1e-5);
  }
}

TEST_CASE("population process range and determinism") {
  const BBox area{{0, 0}, {1000, 1000}};
  MobilityParams mp;
  mp.duration = 1e6;
  const auto forever = MobilitySource::random_waypoint(area, mp);
  {
    PopulationProcess proc(0.0, {10, 30}, 0.1);
    Rng rng(1);
    proc.initialize(20, 0, forever, rng);
    for (int s = 1; s <= 500; ++s) {
      proc.step(s, forever, rng);
      REQUIRE(proc.size() == 20);
    }
  }
  mp.duration = 30.0;
  const auto churn = MobilitySource::random_waypoint(area, mp);
  auto run = [&](std::uint64_t seed) {
    PopulationProcess proc(2.0, {20, 60}, 0.1);
    Rng rng(seed);
    proc.initialize(40, 0, churn, rng);
    std::vector<std::size_t> sizes;
    std::size_t arrivals = 0, departures = 0;
    for (int s = 1; s <= 10000; ++s) {
      const auto change = proc.step(s, churn, rng);
      arrivals += change.arrived.size();
      departures += change.departed.size();
      sizes.push_back(proc.size());
      for (const auto& u : proc.users()) REQUIRE(area.contains(u.position, 1e-9));
    }
    CHECK(arrivals > 0);
    CHECK(departures > 0);
    return sizes;
  };
  const auto a = run(5);
  for (auto s : a) {
    REQUIRE(s >= 20);
    REQUIRE(s <= 60);
  }
  CHECK(run(5) == a);
  CHECK(run(6) != a);
}

TEST_CASE("mobility sources") {
  CHECK(parse_mobility_model("mrwp") == MobilityModel::mrwp);
  CHECK(to_string(MobilityModel::gm) == "gm");
  CHECK_THROWS_AS(parse_mobility_model("walk"), ConfigError);
  CHECK_THROWS_AS(MobilitySource::map_random_waypoint(StreetGraph{}, {}), ConfigError);
  CHECK_THROWS_AS(MobilitySource::playback({}), ConfigError);

  Trajectory shifted{{{10.0, 1.0, 1.0}, {12.0, 3.0, 1.0}}};
  const auto play = MobilitySource::playback({shifted});
  Rng rng(2);
  const auto t = play.generate(rng);
  CHECK(t.start_time() == 0.0);
  CHECK(t.points[1].x == 3.0);
  CHECK(play.mean_duration() == Approx(2.0));
}
