#include "dtcell/mobility/mobility_source.hpp"

#include "dtcell/common/error.hpp"

namespace dtcell::mobility {

MobilityModel parse_mobility_model(const std::string& name) {
  if (name == "rwp") return MobilityModel::rwp;
  if (name == "gm") return MobilityModel::gm;
  if (name == "mrwp") return MobilityModel::mrwp;
  if (name == "mgm") return MobilityModel::mgm;
  if (name == "playback") return MobilityModel::playback;
  throw ConfigError("unknown mobility model '" + name + "' (expected rwp|gm|mrwp|mgm|playback)");
}

std::string to_string(MobilityModel model) {
  switch (model) {
    case MobilityModel::rwp: return "rwp";
    case MobilityModel::gm: return "gm";
    case MobilityModel::mrwp: return "mrwp";
    case MobilityModel::mgm: return "mgm";
    case MobilityModel::playback: return "playback";
  }
  return "?";
}

MobilitySource MobilitySource::random_waypoint(const BBox& area, const MobilityParams& params) {
  MobilitySource s;
  s.model_ = MobilityModel::rwp;
  s.area_ = area;
  s.params_ = params;
  return s;
}

MobilitySource MobilitySource::gauss_markov(const BBox& area, const MobilityParams& params) {
  MobilitySource s = random_waypoint(area, params);
  s.model_ = MobilityModel::gm;
  return s;
}

MobilitySource MobilitySource::map_random_waypoint(StreetGraph graph, const MobilityParams& params) {
  if (graph.edges.empty()) throw ConfigError("map-restricted mobility needs a street graph with edges");
  MobilitySource s;
  s.model_ = MobilityModel::mrwp;
  s.params_ = params;
  auto g = std::make_shared<StreetGraph>(largest_component(graph));
  s.adjacency_ = std::make_shared<const Adjacency>(build_adjacency(*g));
  s.graph_ = std::move(g);
  return s;
}

MobilitySource MobilitySource::map_gauss_markov(StreetGraph graph, const MobilityParams& params) {
  MobilitySource s = map_random_waypoint(std::move(graph), params);
  s.model_ = MobilityModel::mgm;
  return s;
}

MobilitySource MobilitySource::playback(std::vector<Trajectory> traces) {
  std::erase_if(traces, [](const Trajectory& t) { return t.empty(); });
  if (traces.empty()) throw ConfigError("playback mobility needs at least one non-empty trace");
  for (auto& t : traces) t = t.rebased();
  MobilitySource s;
  s.model_ = MobilityModel::playback;
  s.traces_ = std::make_shared<const std::vector<Trajectory>>(std::move(traces));
  return s;
}

Trajectory MobilitySource::generate(Rng& rng) const {
  const auto& p = params_;
  GmParams gm{area_, p.gm_mean_speed, p.gm_memory, p.gm_speed_noise, p.gm_heading_noise, p.v_max, p.duration,
              p.sample_interval};
  switch (model_) {
    case MobilityModel::rwp:
      return rwp_trajectory(rng, {area_, p.v_min, p.v_max, p.duration, p.sample_interval});
    case MobilityModel::gm:
      return gm_trajectory(rng, gm);
    case MobilityModel::mrwp:
      return m_rwp_trajectory(rng, *graph_, *adjacency_, {p.v_min, p.v_max, p.duration, p.sample_interval});
    case MobilityModel::mgm:
      return m_gm_trajectory(rng, *graph_, *adjacency_, gm);
    case MobilityModel::playback:
      return (*traces_)[uniform_index(rng, traces_->size())];
  }
  throw ContractViolation("unhandled mobility model");
}

double MobilitySource::mean_duration() const {
  if (model_ != MobilityModel::playback) return params_.duration;
  double total = 0.0;
  for (const auto& t : *traces_) total += t.duration();
  return total / static_cast<double>(traces_->size());
}

}  // namespace dtcell::mobility
