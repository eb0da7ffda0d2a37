#include "dtcell/radio/scenario.hpp"

#include <cmath>

#include "dtcell/common/binary_io.hpp"
#include "dtcell/common/error.hpp"
#include "dtcell/radio/layout.hpp"
#include "json.hpp"

namespace dtcell::radio {

using nlohmann::json;

void validate(const ScenarioConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("invalid scenario: ") + what);
  };
  require(c.area_width > 0.0 && c.area_height > 0.0, "area must be positive");
  require(c.inter_site_distance > 0.0, "inter_site_distance must be positive");
  require(!c.sites.empty(), "at least one site required");
  for (const auto& s : c.sites) require(c.area().contains(s, 1e-6), "site outside area");
  require(!c.bands.empty(), "at least one band required");
  for (const auto& b : c.bands)
    require(b.carrier_frequency > 0.0 && b.bandwidth > 0.0, "band frequency and bandwidth must be positive");
  require(std::isfinite(c.tx_power), "tx_power must be finite");
  require(c.bs_height > 0.0 && c.user_height > 0.0, "heights must be positive");
  require(std::isfinite(c.noise_psd), "noise_psd must be finite");
  require(c.slot_duration > 0.0, "slot_duration must be positive");
  const auto& h = c.handover;
  require(h.success_probability >= 0.0 && h.success_probability <= 1.0, "handover probability outside [0,1]");
  require(h.success_interruption >= 0.0 && h.success_interruption < c.slot_duration,
          "success_interruption must lie in [0, slot_duration)");
  require(h.failure_interruption >= 0.0 && h.failure_interruption < c.slot_duration,
          "failure_interruption must lie in [0, slot_duration)");
  require(c.reward_alpha >= 0.0 && c.reward_alpha <= 1.0, "reward_alpha outside [0,1]");
  require(c.mask_top_n >= 1 && c.mask_top_n <= c.num_base_stations(), "mask_top_n outside [1, |B|]");
  require(c.user_count_range.min >= 0 && c.user_count_range.min <= c.user_count_range.max,
          "user_count_range must satisfy 0 <= min <= max");
  require(c.shadow_fading.sigma_db >= 0.0, "shadow sigma must be non-negative");
  require(c.shadow_fading.decorrelation_distance > 0.0, "decorrelation_distance must be positive");
  require(c.shadow_fading.sinusoids >= 1, "at least one sinusoid required");
  require(std::isfinite(c.antenna_gain), "antenna_gain must be finite");
}

ScenarioConfig default_scenario() {
  ScenarioConfig c;
  c.area_width = 2000.0;
  c.area_height = 2000.0;
  c.inter_site_distance = 500.0;
  c.sites = build_hex_layout(c.area_width, c.area_height, c.inter_site_distance);
  c.bands = {{3.7, 40e6}, {0.7, 10e6}};
  c.tx_power = 46.0;
  c.bs_height = 25.0;
  c.user_height = 1.5;
  c.noise_psd = -174.0;
  c.slot_duration = 0.100;
  c.handover = {0.8, 0.020, 0.09076};
  c.reward_alpha = 0.5;
  c.mask_top_n = 8;
  c.user_count_range = {100, 400};
  c.master_seed = 1;
  return c;
}

ScenarioConfig desk_scenario() {
  ScenarioConfig c = default_scenario();
  c.area_width = 1000.0;
  c.area_height = 1000.0;
  c.sites = build_hex_layout(c.area_width, c.area_height, c.inter_site_distance);
  c.user_count_range = {20, 60};
  // Small cells: a 4-site candidate set covers every useful choice, and the
  // own-utility reward gives each agent a cleaner credit signal.
  c.mask_top_n = 4;
  c.reward_alpha = 1.0;
  return c;
}

std::string scenario_to_json(const ScenarioConfig& c) {
  json j;
  j["area"] = {c.area_width, c.area_height};
  j["inter_site_distance"] = c.inter_site_distance;
  j["sites"] = json::array();
  for (const auto& s : c.sites) j["sites"].push_back({s.x, s.y});
  j["bands"] = json::array();
  for (const auto& b : c.bands)
    j["bands"].push_back({{"carrier_frequency", b.carrier_frequency}, {"bandwidth", b.bandwidth}});
  j["tx_power"] = c.tx_power;
  j["bs_height"] = c.bs_height;
  j["user_height"] = c.user_height;
  j["noise_psd"] = c.noise_psd;
  j["slot_duration"] = c.slot_duration;
  j["handover"] = {{"success_probability", c.handover.success_probability},
                   {"success_interruption", c.handover.success_interruption},
                   {"failure_interruption", c.handover.failure_interruption}};
  j["reward_alpha"] = c.reward_alpha;
  j["mask_top_n"] = c.mask_top_n;
  j["user_count_range"] = {c.user_count_range.min, c.user_count_range.max};
  j["master_seed"] = c.master_seed;
  j["shadow_fading"] = {{"sigma_db", c.shadow_fading.sigma_db},
                        {"decorrelation_distance", c.shadow_fading.decorrelation_distance},
                        {"sinusoids", c.shadow_fading.sinusoids}};
  j["antenna_gain"] = c.antenna_gain;
  return j.dump(2) + "\n";
}

namespace {

const json& field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw ParseError(std::string("scenario: missing field '") + name + "'");
  return *it;
}

template <typename T>
T number(const json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_number()) throw ParseError(std::string("scenario: field '") + name + "' must be a number");
  return v.get<T>();
}

Vec2 pair_of(const json& v, const char* name) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ParseError(std::string("scenario: '") + name + "' must be a [x, y] pair");
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

ScenarioConfig scenario_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("scenario: top level must be an object");

  ScenarioConfig c;
  const Vec2 area = pair_of(field(j, "area"), "area");
  c.area_width = area.x;
  c.area_height = area.y;
  c.inter_site_distance = number<double>(j, "inter_site_distance");
  const auto& sites = field(j, "sites");
  if (!sites.is_array()) throw ParseError("scenario: 'sites' must be an array");
  for (const auto& s : sites) c.sites.push_back(pair_of(s, "sites[]"));
  const auto& bands = field(j, "bands");
  if (!bands.is_array()) throw ParseError("scenario: 'bands' must be an array");
  for (const auto& b : bands) c.bands.push_back({number<double>(b, "carrier_frequency"), number<double>(b, "bandwidth")});
  c.tx_power = number<double>(j, "tx_power");
  c.bs_height = number<double>(j, "bs_height");
  c.user_height = number<double>(j, "user_height");
  c.noise_psd = number<double>(j, "noise_psd");
  c.slot_duration = number<double>(j, "slot_duration");
  const auto& ho = field(j, "handover");
  c.handover = {number<double>(ho, "success_probability"), number<double>(ho, "success_interruption"),
                number<double>(ho, "failure_interruption")};
  c.reward_alpha = number<double>(j, "reward_alpha");
  c.mask_top_n = number<int>(j, "mask_top_n");
  const Vec2 range = pair_of(field(j, "user_count_range"), "user_count_range");
  c.user_count_range = {static_cast<int>(range.x), static_cast<int>(range.y)};
  if (range.x != c.user_count_range.min || range.y != c.user_count_range.max)
    throw ParseError("scenario: user_count_range must hold integers");
  c.master_seed = number<std::uint64_t>(j, "master_seed");
  if (auto it = j.find("shadow_fading"); it != j.end()) {
    c.shadow_fading = {number<double>(*it, "sigma_db"), number<double>(*it, "decorrelation_distance"),
                       number<int>(*it, "sinusoids")};
  }
  if (j.contains("antenna_gain")) c.antenna_gain = number<double>(j, "antenna_gain");
  validate(c);
  return c;
}

ScenarioConfig load_scenario(const std::string& path) { return scenario_from_json(read_file_bytes(path)); }

void save_scenario(const ScenarioConfig& config, const std::string& path) {
  validate(config);
  write_file_bytes(path, scenario_to_json(config));
}

}  // namespace dtcell::radio
