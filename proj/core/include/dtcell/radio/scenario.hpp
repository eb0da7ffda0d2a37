#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dtcell/common/geometry.hpp"

namespace dtcell::radio {

struct Band {
  double carrier_frequency = 0.0;  // GHz
  double bandwidth = 0.0;          // Hz
};

/// Stochastic handover interruption: success with `success_probability`
/// costs `success_interruption` seconds, failure costs `failure_interruption`.
struct HandoverModel {
  double success_probability = 0.8;
  double success_interruption = 0.020;
  double failure_interruption = 0.09076;
};

struct ShadowFadingParams {
  double sigma_db = 6.0;
  double decorrelation_distance = 50.0;  // meters
  int sinusoids = 30;
};

struct CountRange {
  int min = 0;
  int max = 0;
};

struct ScenarioConfig {
  double area_width = 0.0;   // meters
  double area_height = 0.0;  // meters
  double inter_site_distance = 0.0;
  std::vector<Vec2> sites;
  std::vector<Band> bands;
  double tx_power = 46.0;  // dBm, every BS
  double bs_height = 25.0;
  double user_height = 1.5;
  double noise_psd = -174.0;     // dBm/Hz
  double slot_duration = 0.100;  // seconds
  HandoverModel handover;
  double reward_alpha = 0.5;
  int mask_top_n = 8;
  CountRange user_count_range{100, 400};
  std::uint64_t master_seed = 1;
  ShadowFadingParams shadow_fading;
  double antenna_gain = 0.0;  // dBi

  BBox area() const { return {{0.0, 0.0}, {area_width, area_height}}; }
  int num_base_stations() const { return static_cast<int>(sites.size() * bands.size()); }
};

/// Throws ConfigError naming the first violated invariant.
void validate(const ScenarioConfig& config);

/// The full-size scenario: 2 km x 2 km, 22 hexagonal sites x {3.7, 0.7} GHz.
ScenarioConfig default_scenario();

/// Desk-scale variant: 1 km x 1 km, 7 sites x 2 bands, 20-60 users,
/// top-4 candidate mask and own-utility reward.
ScenarioConfig desk_scenario();

std::string scenario_to_json(const ScenarioConfig& config);
/// Parses and validates. Throws ParseError on schema errors, ConfigError on invariant errors.
ScenarioConfig scenario_from_json(std::string_view text);

ScenarioConfig load_scenario(const std::string& path);
void save_scenario(const ScenarioConfig& config, const std::string& path);

}  // namespace dtcell::radio
