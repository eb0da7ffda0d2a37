#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dtcell::agent {

/// One flag per BS; exactly min(n, |B|) entries are set.
using ActionMask = std::vector<std::uint8_t>;

/// Flags the n largest SINR entries; among equal values the lower index wins.
ActionMask top_n_mask(std::span<const double> sinr, int n);

}  // namespace dtcell::agent
