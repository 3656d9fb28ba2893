#pragma once

#include <cstddef>
#include <cstdint>

namespace adadecay {

// Deterministic counter-based generator (splitmix64). The sample stream is a
// pure function of the seed, so runs reproduce bit-identically across
// platforms. Normal variates use the Box-Muller transform of two uniforms
// (cosine branch, two uniforms consumed per call) rather than any
// platform-specific distribution object.
class RngState {
 public:
  explicit RngState(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64();

  // Uniform double in [0,1) built from the top 53 bits.
  double next_uniform();

  // Standard normal: sqrt(-2 ln(1-u1)) * cos(2 pi u2).
  double next_normal();

  // Uniform integer in [0, bound); bound must be positive.
  std::size_t next_below(std::size_t bound);

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

// Independent substream of a base seed. Streams with different ids never
// collide for the trial lengths used here.
RngState derive_stream(std::uint64_t seed, std::uint64_t stream_id);

}  // namespace adadecay
