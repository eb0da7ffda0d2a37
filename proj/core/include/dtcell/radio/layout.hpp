#pragma once

#include <span>
#include <vector>

#include "dtcell/common/geometry.hpp"
#include "dtcell/radio/scenario.hpp"

namespace dtcell::radio {

/// Hexagonal site lattice cropped to [0,w] x [0,h].
///
/// Rows are `isd * sqrt(3)/2` apart and centered vertically. Row r carries
/// sites at x = (r even ? isd/2 : 0) + m * isd. An area smaller than the
/// lattice pitch in both directions gets one site at its center.
std::vector<Vec2> build_hex_layout(double width, double height, double isd);

struct BaseStation {
  int id = 0;
  int site = 0;
  int band_index = 0;
  Vec2 site_position;
  double height = 0.0;
  Band band;
  double tx_power = 0.0;  // dBm
};

/// Site-major ordering: id = site * |bands| + band_index. With two bands,
/// BSs 2k and 2k+1 share a tower.
std::vector<BaseStation> expand_base_stations(std::span<const Vec2> sites, std::span<const Band> bands,
                                              std::span<const double> tx_power_per_band, double height);

std::vector<BaseStation> base_stations_of(const ScenarioConfig& config);

}  // namespace dtcell::radio
