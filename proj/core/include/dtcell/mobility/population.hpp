#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "dtcell/common/binary_io.hpp"
#include "dtcell/common/rng.hpp"
#include "dtcell/mobility/mobility_source.hpp"
#include "dtcell/mobility/trajectory.hpp"
#include "dtcell/radio/scenario.hpp"

namespace dtcell::mobility {

struct ActiveUser {
  std::uint64_t id = 0;
  std::shared_ptr<const Trajectory> trajectory;
  double entry_time = 0.0;  // absolute time of trajectory t = start
  Vec2 position;
};

struct PopulationChange {
  std::vector<std::uint64_t> departed;
  std::vector<std::uint64_t> arrived;
};

/// Users entering and leaving the area. Arrivals are Poisson per slot and get
/// a fresh trajectory; a user leaves when its trajectory ends. The active
/// count is held inside `range` by dropping surplus arrivals and by keeping
/// ended users parked at their last position. Users are kept sorted by id.
class PopulationProcess {
 public:
  PopulationProcess() = default;
  PopulationProcess(double arrival_rate_per_slot, radio::CountRange range, double slot_duration);

  /// Places `count` users with independent fresh trajectories at uniformly
  /// random phases, so remaining lifetimes are spread out.
  void initialize(int count, std::int64_t slot, const MobilitySource& source, Rng& rng);

  /// Advances to `slot`: departures, then arrivals, then positions.
  PopulationChange step(std::int64_t slot, const MobilitySource& source, Rng& rng);

  const std::vector<ActiveUser>& users() const { return users_; }
  std::size_t size() const { return users_.size(); }
  double arrival_rate() const { return arrival_rate_; }
  radio::CountRange range() const { return range_; }

  void serialize(BinaryWriter& out) const;
  static PopulationProcess deserialize(BinaryReader& in);

 private:
  void update_positions(double time);

  double arrival_rate_ = 0.0;
  radio::CountRange range_;
  double slot_duration_ = 0.1;
  std::uint64_t next_id_ = 0;
  std::vector<ActiveUser> users_;
};

/// Free-function form of PopulationProcess::step.
inline PopulationChange population_step(PopulationProcess& process, std::int64_t slot, const MobilitySource& source,
                                        Rng& rng) {
  return process.step(slot, source, rng);
}

}  // namespace dtcell::mobility
