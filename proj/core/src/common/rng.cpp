#include "dtcell/common/rng.hpp"

#include <sstream>

#include "dtcell/common/error.hpp"

namespace dtcell {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double uniform(Rng& rng, double lo, double hi) {
  // Distributions are constructed per call so no hidden state outlives the
  // generator; checkpointing the engine alone is then exact.
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

std::uint64_t poisson(Rng& rng, double mean) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<std::uint64_t>(mean)(rng);
}

std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw ContractViolation("uniform_index over empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::string serialize_rng(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng deserialize_rng(const std::string& state) {
  std::istringstream is(state);
  Rng rng;
  is >> rng;
  if (!is) throw ParseError("corrupt generator state");
  return rng;
}

}  // namespace dtcell
