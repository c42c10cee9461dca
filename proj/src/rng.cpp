#include "degenbranch/rng.hpp"

#include <array>
#include <cmath>

namespace degenbranch {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

Stream::Stream(std::uint64_t seed) {
  std::uint64_t state = seed;
  std::array<std::uint32_t, 8> words{};
  for (std::size_t i = 0; i < words.size(); i += 2) {
    const std::uint64_t v = splitmix64(state);
    words[i] = static_cast<std::uint32_t>(v);
    words[i + 1] = static_cast<std::uint32_t>(v >> 32);
  }
  std::seed_seq seq(words.begin(), words.end());
  engine_.seed(seq);
}

std::uint64_t Stream::poisson(double mean) {
  if (!(mean > 0.0)) return 0;
  return std::poisson_distribution<std::uint64_t>(mean)(engine_);
}

Stream derive_stream(std::uint64_t master_seed, std::uint64_t replicate_id,
                     std::string_view purpose_tag) {
  // Absorb the three key components one at a time so that each output bit
  // depends on all of them.
  std::uint64_t state = master_seed;
  std::uint64_t key = splitmix64(state);
  state = key ^ replicate_id;
  key = splitmix64(state);
  state = key ^ fnv1a64(purpose_tag);
  key = splitmix64(state);
  return Stream(key);
}

}  // namespace degenbranch
