#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dtcell/mobility/trajectory.hpp"

namespace dtcell::mobility {

/// Trace CSV: header `traj_id,t_s,x_m,y_m`, rows sorted by (traj_id, t_s),
/// floats printed with 6 decimals. Trajectories are written with ids 0..n-1.
std::string traces_to_csv(const std::vector<Trajectory>& trajectories);
/// Throws ParseError carrying the offending line number.
std::vector<Trajectory> traces_from_csv(std::string_view text);

std::vector<Trajectory> load_traces(const std::string& path);
void save_traces(const std::vector<Trajectory>& trajectories, const std::string& path);

}  // namespace dtcell::mobility
