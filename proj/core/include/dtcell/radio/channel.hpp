#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dtcell/common/geometry.hpp"
#include "dtcell/common/rng.hpp"
#include "dtcell/radio/layout.hpp"
#include "dtcell/radio/scenario.hpp"

namespace dtcell::radio {

/// 3GPP TR 38.901 UMa NLOS pathloss in dB. Distances below 1 m are clamped to 1 m.
double pathloss_db(double d2d, double fc_ghz, double h_bs, double h_ut);

struct SinusoidComponent {
  double amplitude_db;
  double kx;  // rad/m
  double ky;
  double phase;
};

/// Spatially consistent log-normal shadowing built from a sum of sinusoids.
///
/// Wavevector magnitudes follow the radial spectrum of an isotropic field with
/// exponential autocorrelation exp(-d / decorrelation_distance), sampled on
/// stratified quantiles. Each BS has its own independently seeded component set.
class ShadowField {
 public:
  ShadowField() = default;
  ShadowField(int num_base_stations, const ShadowFadingParams& params, std::uint64_t seed);

  double shadow_db(Vec2 position, int bs_id) const;
  int num_base_stations() const { return static_cast<int>(components_.size()); }
  const std::vector<SinusoidComponent>& components(int bs_id) const;
  const ShadowFadingParams& params() const { return params_; }

 private:
  ShadowFadingParams params_;
  std::vector<std::vector<SinusoidComponent>> components_;
};

struct GainComponents {
  double pathloss_db;
  double shadow_db;
  double antenna_gain_db;
  double gain;  // linear
};

/// Large-scale channel of a scenario: pathloss + shadowing + fixed antenna gain.
class ChannelModel {
 public:
  explicit ChannelModel(const ScenarioConfig& config);

  const std::vector<BaseStation>& base_stations() const { return bss_; }
  int num_base_stations() const { return static_cast<int>(bss_.size()); }
  const ShadowField& shadow_field() const { return shadow_; }
  double noise_psd_mw_per_hz() const { return noise_mw_per_hz_; }

  double shadow_db(Vec2 position, int bs_id) const { return shadow_.shadow_db(position, bs_id); }
  GainComponents gain_components(Vec2 position, int bs_id) const;
  double channel_gain(Vec2 position, int bs_id) const { return gain_components(position, bs_id).gain; }
  /// Gains towards every BS, written into `out` (resized to |B|).
  void channel_gains(Vec2 position, std::vector<double>& out) const;

 private:
  std::vector<BaseStation> bss_;
  ShadowField shadow_;
  double user_height_;
  double antenna_gain_db_;
  double noise_mw_per_hz_;
};

/// g * (1 + u), u ~ U[-magnitude, magnitude]. magnitude must lie in [0, 1).
double perturb_gain(double gain, double magnitude, Rng& rng);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

}  // namespace dtcell::radio
