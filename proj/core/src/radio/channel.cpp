#include "dtcell/radio/channel.hpp"

#include <algorithm>
#include <numbers>

#include "dtcell/common/error.hpp"

namespace dtcell::radio {

double pathloss_db(double d2d, double fc_ghz, double h_bs, double h_ut) {
  const double d = std::max(d2d, 1.0);
  const double dh = h_bs - h_ut;
  const double d3d = std::sqrt(d * d + dh * dh);
  return 13.54 + 39.08 * std::log10(d3d) + 20.0 * std::log10(fc_ghz) - 0.6 * (h_ut - 1.5);
}

ShadowField::ShadowField(int num_base_stations, const ShadowFadingParams& params, std::uint64_t seed)
    : params_(params) {
  if (num_base_stations < 0 || params.sinusoids < 1 || !(params.decorrelation_distance > 0.0))
    throw ConfigError("shadow field: invalid parameters");
  const int m = params.sinusoids;
  const double amplitude = params.sigma_db * std::sqrt(2.0 / m);
  const double inv_l = 1.0 / params.decorrelation_distance;
  components_.resize(num_base_stations);
  for (int bs = 0; bs < num_base_stations; ++bs) {
    Rng rng = make_rng(seed, 0x5F0000 + static_cast<std::uint64_t>(bs));
    auto& comps = components_[bs];
    comps.reserve(m);
    for (int k = 0; k < m; ++k) {
      // Radial CDF of the 2-D exponential-correlation spectrum: F(k) = 1 - 1/sqrt(1 + (kL)^2).
      const double u = (k + uniform(rng, 0.0, 1.0)) / m;
      const double one_minus = std::max(1.0 - u, 1e-12);
      const double mag = inv_l * std::sqrt(1.0 / (one_minus * one_minus) - 1.0);
      const double angle = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
      comps.push_back({amplitude, mag * std::cos(angle), mag * std::sin(angle), phase});
    }
  }
}

const std::vector<SinusoidComponent>& ShadowField::components(int bs_id) const {
  if (bs_id < 0 || bs_id >= num_base_stations()) throw LookupError("shadow field: unknown BS id");
  return components_[bs_id];
}

double ShadowField::shadow_db(Vec2 p, int bs_id) const {
  double sum = 0.0;
  for (const auto& c : components(bs_id)) sum += c.amplitude_db * std::cos(c.kx * p.x + c.ky * p.y + c.phase);
  return sum;
}

ChannelModel::ChannelModel(const ScenarioConfig& config)
    : bss_(base_stations_of(config)),
      shadow_(static_cast<int>(bss_.size()), config.shadow_fading, config.master_seed),
      user_height_(config.user_height),
      antenna_gain_db_(config.antenna_gain),
      noise_mw_per_hz_(dbm_to_mw(config.noise_psd)) {}

GainComponents ChannelModel::gain_components(Vec2 position, int bs_id) const {
  if (bs_id < 0 || bs_id >= num_base_stations()) throw LookupError("channel: unknown BS id");
  const auto& bs = bss_[bs_id];
  GainComponents g;
  g.pathloss_db = pathloss_db(distance(position, bs.site_position), bs.band.carrier_frequency, bs.height, user_height_);
  g.shadow_db = shadow_.shadow_db(position, bs_id);
  g.antenna_gain_db = antenna_gain_db_;
  g.gain = std::pow(10.0, -(g.pathloss_db + g.shadow_db - g.antenna_gain_db) / 10.0);
  return g;
}

void ChannelModel::channel_gains(Vec2 position, std::vector<double>& out) const {
  out.resize(bss_.size());
  for (std::size_t j = 0; j < bss_.size(); ++j) out[j] = gain_components(position, static_cast<int>(j)).gain;
}

double perturb_gain(double gain, double magnitude, Rng& rng) {
  if (!(magnitude >= 0.0 && magnitude < 1.0)) throw ContractViolation("perturb_gain: magnitude must lie in [0, 1)");
  if (magnitude == 0.0) return gain;
  return gain * (1.0 + uniform(rng, -magnitude, magnitude));
}

}  // namespace dtcell::radio
