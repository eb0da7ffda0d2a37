#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dtcell/common/geometry.hpp"

namespace dtcell::mobility {

/// Road tiers; the raster has one channel per tier.
enum class RoadClass : int { trunk = 0, primary = 1, residential = 2 };
inline constexpr int kRoadClassCount = 3;

struct StreetEdge {
  int a = 0;
  int b = 0;
  int road_class = 0;
};

/// Undirected street network. Node ids are indices into `nodes`.
struct StreetGraph {
  std::vector<Vec2> nodes;
  std::vector<StreetEdge> edges;
};

/// Neighbor lists sorted by node id; the order drives BFS tie-breaking.
using Adjacency = std::vector<std::vector<int>>;
Adjacency build_adjacency(const StreetGraph& graph);

struct StreetSynthParams {
  BBox area;
  double block_size = 100.0;
  double drop_fraction = 0.0;
  std::vector<double> class_weights{0.15, 0.25, 0.60};
};

/// Manhattan lattice with nodes every `block_size` meters. Each lattice line
/// draws one road class from `class_weights`, each edge is then dropped with
/// probability `drop_fraction`, and only the largest connected component is
/// kept (nodes re-indexed in lattice order).
StreetGraph synth_street_graph(std::uint64_t seed, const StreetSynthParams& params);

/// Largest connected component; ties go to the component holding the lowest node id.
StreetGraph largest_component(const StreetGraph& graph);

/// Minimum-hop path from a to b, inclusive of both ends. BFS expands
/// neighbors in ascending id order, so among equal-length paths the one
/// discovered first through lower ids wins. Throws LookupError when b is
/// unreachable.
std::vector<int> shortest_path(const StreetGraph& graph, int a, int b);
std::vector<int> shortest_path(const Adjacency& adjacency, int a, int b);

/// Distance from p to the nearest edge (or node, for an edgeless graph).
double distance_to_graph(const StreetGraph& graph, Vec2 p);

std::string street_graph_to_json(const StreetGraph& graph);
StreetGraph street_graph_from_json(std::string_view text);
StreetGraph load_street_graph(const std::string& path);
void save_street_graph(const StreetGraph& graph, const std::string& path);

}  // namespace dtcell::mobility
