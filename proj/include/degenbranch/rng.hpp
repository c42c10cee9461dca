#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace degenbranch {

// Identifier of the per-replicate stream derivation rule, recorded in run
// manifests so that a result file names the scheme that produced it.
inline constexpr std::string_view kStreamDerivationRule =
    "splitmix64(master_seed, replicate_id, fnv1a64(tag)) -> seed_seq -> mt19937_64";

// A random stream owned by exactly one caller. Copyable so that tests can
// fork a stream and replay the same prefix.
class Stream {
 public:
  explicit Stream(std::uint64_t seed);

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_open(); }

  // Exp(rate), rate > 0.
  double exponential(double rate) { return -std::log(uniform_open()) / rate; }

  double normal() { return normal_(engine_); }

  std::uint64_t poisson(double mean);

  // Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Streams for distinct (replicate_id, purpose_tag) pairs come from a keyed
// hash of the triple; no stream is ever a jump-ahead of another.
Stream derive_stream(std::uint64_t master_seed, std::uint64_t replicate_id,
                     std::string_view purpose_tag);

std::uint64_t fnv1a64(std::string_view text);
std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace degenbranch
