#include "dtcell/mobility/raster.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

#include "dtcell/common/error.hpp"

namespace dtcell::mobility {

namespace {

constexpr int N = MapRaster::kSize;

int clamp_cell(double v) {
  if (!(v >= 0.0)) return 0;
  if (v >= N) return N - 1;
  return static_cast<int>(v);
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

std::pair<int, int> MapRaster::cell_of(Vec2 p) const {
  const int col = clamp_cell(std::floor((p.x - bbox.min.x) / cell_width()));
  const int row_from_south = clamp_cell(std::floor((p.y - bbox.min.y) / cell_height()));
  return {N - 1 - row_from_south, col};
}

Vec2 MapRaster::cell_center(int row, int col) const {
  return {bbox.min.x + (col + 0.5) * cell_width(), bbox.min.y + (N - 1 - row + 0.5) * cell_height()};
}

std::size_t MapRaster::active_cells(int channel) const {
  const auto begin = cells.begin() + static_cast<std::ptrdiff_t>(channel) * N * N;
  return static_cast<std::size_t>(std::count_if(begin, begin + N * N, [](std::uint8_t v) { return v != 0; }));
}

MapRaster make_empty_raster(const BBox& bbox, int channels) {
  if (!(bbox.width() > 0.0 && bbox.height() > 0.0)) throw ConfigError("raster: empty bounding box");
  if (channels < 1) throw ConfigError("raster: need at least one channel");
  MapRaster r;
  r.channels = channels;
  r.bbox = bbox;
  r.cells.assign(static_cast<std::size_t>(channels) * N * N, 0);
  return r;
}

MapRaster rasterize_graph(const StreetGraph& graph, const BBox& bbox, int channels) {
  MapRaster r = make_empty_raster(bbox, channels);
  const double cw = r.cell_width();
  const double ch = r.cell_height();
  for (const auto& e : graph.edges) {
    if (e.road_class < 0 || e.road_class >= channels) throw ConfigError("raster: road class outside channel range");
    // Continuous grid coordinates measured from the south-west corner.
    const double u0 = (graph.nodes[e.a].x - bbox.min.x) / cw;
    const double v0 = (graph.nodes[e.a].y - bbox.min.y) / ch;
    const double u1 = (graph.nodes[e.b].x - bbox.min.x) / cw;
    const double v1 = (graph.nodes[e.b].y - bbox.min.y) / ch;
    int cx = clamp_cell(std::floor(u0));
    int cy = clamp_cell(std::floor(v0));
    const int ex = clamp_cell(std::floor(u1));
    const int ey = clamp_cell(std::floor(v1));
    const double du = u1 - u0;
    const double dv = v1 - v0;
    const int sx = du > 0 ? 1 : (du < 0 ? -1 : 0);
    const int sy = dv > 0 ? 1 : (dv < 0 ? -1 : 0);
    constexpr double inf = std::numeric_limits<double>::infinity();
    double tmax_x = sx == 0 ? inf : ((sx > 0 ? cx + 1 : cx) - u0) / du;
    double tmax_y = sy == 0 ? inf : ((sy > 0 ? cy + 1 : cy) - v0) / dv;
    const double tdelta_x = sx == 0 ? inf : 1.0 / std::abs(du);
    const double tdelta_y = sy == 0 ? inf : 1.0 / std::abs(dv);

    r.at(e.road_class, N - 1 - cy, cx) = 1;
    int budget = std::abs(ex - cx) + std::abs(ey - cy);
    while (budget-- > 0 && (cx != ex || cy != ey)) {
      if (tmax_x < tmax_y) {
        cx += sx;
        tmax_x += tdelta_x;
      } else {
        cy += sy;
        tmax_y += tdelta_y;
      }
      cx = std::clamp(cx, 0, N - 1);
      cy = std::clamp(cy, 0, N - 1);
      r.at(e.road_class, N - 1 - cy, cx) = 1;
    }
  }
  return r;
}

namespace {

void write_channel_png(const MapRaster& raster, const int c, const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng initialisation failed");
  }
  std::vector<png_byte> row(N);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng write failed: " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, N, N, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < N; ++r) {
    for (int col = 0; col < N; ++col) row[col] = raster.at(c, r, col) ? 255 : 0;
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void read_channel_png(MapRaster& raster, const int c, const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng initialisation failed");
  }
  std::vector<png_byte> row(N);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("corrupt PNG: " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  if (png_get_image_width(png, info) != N || png_get_image_height(png, info) != N ||
      png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY || png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("raster PNG must be 192x192 8-bit grayscale: " + path);
  }
  for (int r = 0; r < N; ++r) {
    png_read_row(png, row.data(), nullptr);
    for (int col = 0; col < N; ++col) raster.at(c, r, col) = row[col] >= 128 ? 1 : 0;
  }
  png_destroy_read_struct(&png, &info, nullptr);
}

}  // namespace

std::vector<std::string> write_raster_pngs(const MapRaster& raster, const std::string& prefix) {
  std::vector<std::string> paths;
  for (int c = 0; c < raster.channels; ++c) {
    paths.push_back(prefix + "_c" + std::to_string(c) + ".png");
    write_channel_png(raster, c, paths.back());
  }
  return paths;
}

MapRaster read_raster_pngs(const std::string& prefix, int channels, const BBox& bbox) {
  MapRaster raster = make_empty_raster(bbox, channels);
  for (int c = 0; c < channels; ++c) read_channel_png(raster, c, prefix + "_c" + std::to_string(c) + ".png");
  return raster;
}

}  // namespace dtcell::mobility
