#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dtcell/common/geometry.hpp"
#include "dtcell/mobility/street_graph.hpp"

namespace dtcell::mobility {

/// C binary 192x192 grids over a bounding box. Row 0 is the northern edge
/// (image convention). Cells are half-open [x0, x1) x [y0, y1); the cells
/// touching the max edges also own that edge.
struct MapRaster {
  static constexpr int kSize = 192;

  int channels = 0;
  BBox bbox;
  std::vector<std::uint8_t> cells;  // channel-major, then row, then column

  double cell_width() const { return bbox.width() / kSize; }
  double cell_height() const { return bbox.height() / kSize; }
  std::uint8_t at(int channel, int row, int col) const {
    return cells[(static_cast<std::size_t>(channel) * kSize + row) * kSize + col];
  }
  std::uint8_t& at(int channel, int row, int col) {
    return cells[(static_cast<std::size_t>(channel) * kSize + row) * kSize + col];
  }
  /// (row, col) of the cell containing p, clamped to the grid.
  std::pair<int, int> cell_of(Vec2 p) const;
  Vec2 cell_center(int row, int col) const;
  std::size_t active_cells(int channel) const;
};

MapRaster make_empty_raster(const BBox& bbox, int channels);

/// Marks every cell crossed by an edge in its class channel (grid traversal
/// over half-open cells).
MapRaster rasterize_graph(const StreetGraph& graph, const BBox& bbox, int channels = kRoadClassCount);

/// Writes `<prefix>_c<k>.png` per channel, 8-bit grayscale, 255 = street.
std::vector<std::string> write_raster_pngs(const MapRaster& raster, const std::string& prefix);
MapRaster read_raster_pngs(const std::string& prefix, int channels, const BBox& bbox);

}  // namespace dtcell::mobility
