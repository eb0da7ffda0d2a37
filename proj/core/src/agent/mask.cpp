#include "dtcell/agent/mask.hpp"

#include <algorithm>
#include <numeric>

#include "dtcell/common/error.hpp"

namespace dtcell::agent {

ActionMask top_n_mask(std::span<const double> sinr, int n) {
  if (n < 1) throw ContractViolation("top_n_mask: n must be positive");
  const std::size_t keep = std::min(static_cast<std::size_t>(n), sinr.size());
  std::vector<std::size_t> order(sinr.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sinr[a] > sinr[b]; });
  ActionMask mask(sinr.size(), 0);
  for (std::size_t i = 0; i < keep; ++i) mask[order[i]] = 1;
  return mask;
}

}  // namespace dtcell::agent
