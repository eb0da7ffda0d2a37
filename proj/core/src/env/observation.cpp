#include "dtcell/env/observation.hpp"

namespace dtcell::env {

std::vector<double> Observation::flatten() const {
  std::vector<double> out;
  out.reserve(3 * sinr.size());
  out.insert(out.end(), sinr.begin(), sinr.end());
  out.insert(out.end(), prev_loads.begin(), prev_loads.end());
  out.insert(out.end(), prev_assoc.begin(), prev_assoc.end());
  return out;
}

Observation compose_observation(std::vector<double> sinr, const std::vector<int>& prev_loads, int previous_bs) {
  Observation obs;
  const std::size_t n = sinr.size();
  obs.sinr = std::move(sinr);
  obs.prev_loads.assign(prev_loads.begin(), prev_loads.end());
  obs.prev_assoc.assign(n, 0.0);
  if (previous_bs >= 0) obs.prev_assoc.at(previous_bs) = 1.0;
  return obs;
}

}  // namespace dtcell::env
