#include "dtcell/mobility/population.hpp"

#include <algorithm>

#include "dtcell/common/error.hpp"

namespace dtcell::mobility {

PopulationProcess::PopulationProcess(double arrival_rate_per_slot, radio::CountRange range, double slot_duration)
    : arrival_rate_(arrival_rate_per_slot), range_(range), slot_duration_(slot_duration) {
  if (arrival_rate_per_slot < 0.0) throw ConfigError("population: negative arrival rate");
  if (range.min < 0 || range.min > range.max) throw ConfigError("population: invalid user count range");
  if (!(slot_duration > 0.0)) throw ConfigError("population: slot duration must be positive");
}

void PopulationProcess::initialize(int count, std::int64_t slot, const MobilitySource& source, Rng& rng) {
  if (count < range_.min || count > range_.max) throw ConfigError("population: initial count outside range");
  users_.clear();
  const double now = static_cast<double>(slot) * slot_duration_;
  for (int k = 0; k < count; ++k) {
    auto traj = std::make_shared<const Trajectory>(source.generate(rng));
    const double phase = uniform(rng, 0.0, 1.0) * traj->duration();
    users_.push_back({next_id_++, std::move(traj), now - phase, {}});
  }
  update_positions(now);
}

PopulationChange PopulationProcess::step(std::int64_t slot, const MobilitySource& source, Rng& rng) {
  PopulationChange change;
  const double now = static_cast<double>(slot) * slot_duration_;

  std::size_t allowed = users_.size() > static_cast<std::size_t>(range_.min) ? users_.size() - range_.min : 0;
  std::erase_if(users_, [&](const ActiveUser& u) {
    const bool ended = now - u.entry_time > u.trajectory->duration();
    if (!ended || allowed == 0) return false;
    --allowed;
    change.departed.push_back(u.id);
    return true;
  });

  const auto drawn = poisson(rng, arrival_rate_);
  const std::size_t room = users_.size() < static_cast<std::size_t>(range_.max) ? range_.max - users_.size() : 0;
  const std::size_t arrivals = std::min<std::size_t>(drawn, room);
  for (std::size_t k = 0; k < arrivals; ++k) {
    auto traj = std::make_shared<const Trajectory>(source.generate(rng));
    change.arrived.push_back(next_id_);
    users_.push_back({next_id_++, std::move(traj), now, {}});
  }
  update_positions(now);
  return change;
}

void PopulationProcess::update_positions(double time) {
  for (auto& u : users_) u.position = u.trajectory->position_at(u.trajectory->start_time() + (time - u.entry_time));
}

void PopulationProcess::serialize(BinaryWriter& out) const {
  out.put(arrival_rate_);
  out.put<std::int32_t>(range_.min);
  out.put<std::int32_t>(range_.max);
  out.put(slot_duration_);
  out.put(next_id_);
  out.put<std::uint64_t>(users_.size());
  for (const auto& u : users_) {
    out.put(u.id);
    out.put(u.entry_time);
    out.put(u.position.x);
    out.put(u.position.y);
    std::vector<double> flat;
    flat.reserve(u.trajectory->size() * 3);
    for (const auto& p : u.trajectory->points) flat.insert(flat.end(), {p.t, p.x, p.y});
    out.put_vector(flat);
  }
}

PopulationProcess PopulationProcess::deserialize(BinaryReader& in) {
  PopulationProcess p;
  p.arrival_rate_ = in.get<double>();
  p.range_.min = in.get<std::int32_t>();
  p.range_.max = in.get<std::int32_t>();
  p.slot_duration_ = in.get<double>();
  p.next_id_ = in.get<std::uint64_t>();
  const auto n = in.get<std::uint64_t>();
  for (std::uint64_t k = 0; k < n; ++k) {
    ActiveUser u;
    u.id = in.get<std::uint64_t>();
    u.entry_time = in.get<double>();
    u.position.x = in.get<double>();
    u.position.y = in.get<double>();
    const auto flat = in.get_vector<double>();
    if (flat.size() % 3 != 0 || flat.empty()) throw ParseError("population snapshot: malformed trajectory");
    Trajectory t;
    for (std::size_t i = 0; i < flat.size(); i += 3) t.points.push_back({flat[i], flat[i + 1], flat[i + 2]});
    u.trajectory = std::make_shared<const Trajectory>(std::move(t));
    p.users_.push_back(std::move(u));
  }
  return p;
}

}  // namespace dtcell::mobility
