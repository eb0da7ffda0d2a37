#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace dtcell {

/// Every stochastic component owns one of these; no global generator exists.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer applied to (master, stream); used to derive
/// statistically independent child seeds from one master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

inline Rng make_rng(std::uint64_t master, std::uint64_t stream) { return Rng(derive_seed(master, stream)); }

double uniform(Rng& rng, double lo, double hi);
double standard_normal(Rng& rng);
std::uint64_t poisson(Rng& rng, double mean);
/// Uniform integer in [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n);

std::string serialize_rng(const Rng& rng);
Rng deserialize_rng(const std::string& state);

}  // namespace dtcell
