#include "dtcell/radio/layout.hpp"

#include <cmath>

#include "dtcell/common/error.hpp"

namespace dtcell::radio {

std::vector<Vec2> build_hex_layout(double width, double height, double isd) {
  if (!(width > 0.0) || !(height > 0.0)) throw ConfigError("hex layout: area must be positive");
  if (!(isd > 0.0)) throw ConfigError("hex layout: inter-site distance must be positive");

  const double pitch = isd * std::sqrt(3.0) / 2.0;
  const double eps = 1e-9 * isd;
  const int rows = static_cast<int>(std::floor(height / pitch + 1e-9)) + 1;
  const double y0 = 0.5 * (height - (rows - 1) * pitch);

  std::vector<Vec2> sites;
  for (int r = 0; r < rows; ++r) {
    const double y = y0 + r * pitch;
    for (double x = (r % 2 == 0) ? 0.5 * isd : 0.0; x <= width + eps; x += isd) sites.push_back({x, y});
  }
  if (sites.empty()) sites.push_back({0.5 * width, 0.5 * height});
  return sites;
}

std::vector<BaseStation> expand_base_stations(std::span<const Vec2> sites, std::span<const Band> bands,
                                              std::span<const double> tx_power_per_band, double height) {
  if (sites.empty() || bands.empty()) throw ConfigError("expand_base_stations: need sites and bands");
  if (tx_power_per_band.size() != bands.size() && tx_power_per_band.size() != 1)
    throw ConfigError("expand_base_stations: one tx power per band (or one for all) required");
  std::vector<BaseStation> out;
  out.reserve(sites.size() * bands.size());
  for (std::size_t s = 0; s < sites.size(); ++s) {
    for (std::size_t b = 0; b < bands.size(); ++b) {
      BaseStation bs;
      bs.id = static_cast<int>(out.size());
      bs.site = static_cast<int>(s);
      bs.band_index = static_cast<int>(b);
      bs.site_position = sites[s];
      bs.height = height;
      bs.band = bands[b];
      bs.tx_power = tx_power_per_band.size() == 1 ? tx_power_per_band[0] : tx_power_per_band[b];
      out.push_back(bs);
    }
  }
  return out;
}

std::vector<BaseStation> base_stations_of(const ScenarioConfig& config) {
  const double power = config.tx_power;
  return expand_base_stations(config.sites, config.bands, std::span<const double>(&power, 1), config.bs_height);
}

}  // namespace dtcell::radio
