#pragma once

#include <cstdint>
#include <string>

#include "dtcell/agent/policy.hpp"

namespace dtcell::agent {

/// Weights container, little-endian:
///   "DTCW" | u32 version (=1) | u32 tensor count |
///   per tensor: u32 name length, name bytes, u32 rank, u64 dims[rank],
///               f32 data[prod(dims)] row-major.
/// The value normalizer travels as tensor "value_norm" = [mean, stddev, initialized].
inline constexpr std::uint32_t kWeightsFormatVersion = 1;

std::string encode_weights(const PolicyParameters& params);
/// Throws ParseError on bad magic, version, or truncated data.
PolicyParameters decode_weights(const std::string& bytes);

void save_weights(const PolicyParameters& params, const std::string& path);
PolicyParameters load_weights(const std::string& path);

}  // namespace dtcell::agent
