#include "dtcell/mobility/street_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "dtcell/common/binary_io.hpp"
#include "dtcell/common/error.hpp"
#include "dtcell/common/rng.hpp"
#include "json.hpp"

namespace dtcell::mobility {

Adjacency build_adjacency(const StreetGraph& graph) {
  Adjacency adj(graph.nodes.size());
  for (const auto& e : graph.edges) {
    if (e.a == e.b) continue;
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  for (auto& list : adj) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return adj;
}

namespace {

int draw_class(Rng& rng, const std::vector<double>& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = uniform(rng, 0.0, total);
  for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
    if (u < weights[k]) return static_cast<int>(k);
    u -= weights[k];
  }
  return static_cast<int>(weights.size()) - 1;
}

}  // namespace

StreetGraph synth_street_graph(std::uint64_t seed, const StreetSynthParams& p) {
  if (!(p.block_size > 0.0)) throw ConfigError("street synth: block_size must be positive");
  if (!(p.drop_fraction >= 0.0 && p.drop_fraction < 0.5)) throw ConfigError("street synth: drop_fraction outside [0, 0.5)");
  if (p.class_weights.empty() || std::any_of(p.class_weights.begin(), p.class_weights.end(), [](double w) { return w < 0; }) ||
      std::accumulate(p.class_weights.begin(), p.class_weights.end(), 0.0) <= 0.0)
    throw ConfigError("street synth: class weights must be non-negative with a positive sum");

  const int nx = static_cast<int>(std::floor(p.area.width() / p.block_size + 1e-9)) + 1;
  const int ny = static_cast<int>(std::floor(p.area.height() / p.block_size + 1e-9)) + 1;
  Rng rng = make_rng(seed, 0x57EE7);

  StreetGraph lattice;
  lattice.nodes.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) lattice.nodes.push_back({p.area.min.x + i * p.block_size, p.area.min.y + j * p.block_size});

  std::vector<int> row_class(ny), col_class(nx);
  for (auto& c : row_class) c = draw_class(rng, p.class_weights);
  for (auto& c : col_class) c = draw_class(rng, p.class_weights);

  auto id = [nx](int i, int j) { return j * nx + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (i + 1 < nx && uniform(rng, 0.0, 1.0) >= p.drop_fraction)
        lattice.edges.push_back({id(i, j), id(i + 1, j), row_class[j]});
      if (j + 1 < ny && uniform(rng, 0.0, 1.0) >= p.drop_fraction)
        lattice.edges.push_back({id(i, j), id(i, j + 1), col_class[i]});
    }
  }
  StreetGraph graph = largest_component(lattice);
  if (graph.edges.empty()) throw ConfigError("street synth: parameters yield an empty street graph");
  return graph;
}

StreetGraph largest_component(const StreetGraph& graph) {
  const auto adj = build_adjacency(graph);
  const int n = static_cast<int>(graph.nodes.size());
  std::vector<int> label(n, -1);
  std::vector<int> sizes;
  for (int s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    const int comp = static_cast<int>(sizes.size());
    int size = 0;
    std::queue<int> q;
    q.push(s);
    label[s] = comp;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      ++size;
      for (int v : adj[u])
        if (label[v] < 0) {
          label[v] = comp;
          q.push(v);
        }
    }
    sizes.push_back(size);
  }
  if (sizes.empty()) return {};
  const int best = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());

  StreetGraph out;
  std::vector<int> remap(n, -1);
  for (int v = 0; v < n; ++v) {
    if (label[v] != best) continue;
    remap[v] = static_cast<int>(out.nodes.size());
    out.nodes.push_back(graph.nodes[v]);
  }
  for (const auto& e : graph.edges)
    if (label[e.a] == best) out.edges.push_back({remap[e.a], remap[e.b], e.road_class});
  return out;
}

std::vector<int> shortest_path(const Adjacency& adj, int a, int b) {
  const int n = static_cast<int>(adj.size());
  if (a < 0 || a >= n || b < 0 || b >= n) throw LookupError("shortest_path: node out of range");
  if (a == b) return {a};
  std::vector<int> parent(n, -1);
  std::queue<int> q;
  q.push(a);
  parent[a] = a;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[u]) {
      if (parent[v] >= 0) continue;
      parent[v] = u;
      if (v == b) {
        std::vector<int> path{b};
        for (int w = b; w != a; w = parent[w]) path.push_back(parent[w]);
        std::reverse(path.begin(), path.end());
        return path;
      }
      q.push(v);
    }
  }
  throw LookupError("shortest_path: nodes " + std::to_string(a) + " and " + std::to_string(b) + " are disconnected");
}

std::vector<int> shortest_path(const StreetGraph& graph, int a, int b) {
  return shortest_path(build_adjacency(graph), a, b);
}

double distance_to_graph(const StreetGraph& graph, Vec2 p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : graph.edges)
    best = std::min(best, point_segment_distance(p, graph.nodes[e.a], graph.nodes[e.b]));
  if (graph.edges.empty())
    for (const auto& v : graph.nodes) best = std::min(best, distance(p, v));
  return best;
}

std::string street_graph_to_json(const StreetGraph& graph) {
  nlohmann::json j;
  j["nodes"] = nlohmann::json::array();
  for (const auto& v : graph.nodes) j["nodes"].push_back({v.x, v.y});
  j["edges"] = nlohmann::json::array();
  for (const auto& e : graph.edges) j["edges"].push_back({e.a, e.b, e.road_class});
  return j.dump() + "\n";
}

StreetGraph street_graph_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("street graph: ") + e.what());
  }
  if (!j.is_object() || !j.contains("nodes") || !j.contains("edges") || !j["nodes"].is_array() || !j["edges"].is_array())
    throw ParseError("street graph: expected {nodes:[...], edges:[...]}");
  StreetGraph g;
  for (const auto& v : j["nodes"]) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw ParseError("street graph: node must be [x, y]");
    g.nodes.push_back({v[0].get<double>(), v[1].get<double>()});
  }
  const int n = static_cast<int>(g.nodes.size());
  for (const auto& e : j["edges"]) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() || !e[1].is_number_integer() ||
        !e[2].is_number_integer())
      throw ParseError("street graph: edge must be [a, b, class]");
    StreetEdge edge{e[0].get<int>(), e[1].get<int>(), e[2].get<int>()};
    if (edge.a < 0 || edge.a >= n || edge.b < 0 || edge.b >= n) throw ParseError("street graph: edge endpoint out of range");
    if (edge.road_class < 0) throw ParseError("street graph: negative road class");
    g.edges.push_back(edge);
  }
  return g;
}

StreetGraph load_street_graph(const std::string& path) { return street_graph_from_json(read_file_bytes(path)); }

void save_street_graph(const StreetGraph& graph, const std::string& path) {
  write_file_bytes(path, street_graph_to_json(graph));
}

}  // namespace dtcell::mobility
