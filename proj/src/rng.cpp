#include "adadecay/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace adadecay {

std::uint64_t RngState::next_u64() {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double RngState::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngState::next_normal() {
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  // 1-u1 lies in (0,1], so the log is finite; u1 has 53 bits, bounding the
  // radius at about 8.6 sigma.
  const double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  const double two_pi = 6.283185307179586476925286766559;
  return r * std::cos(two_pi * u2);
}

std::size_t RngState::next_below(std::size_t bound) {
  if (bound == 0) throw std::invalid_argument("RngState::next_below: bound must be positive");
  // next_uniform() < 1 strictly, so the floor stays below bound.
  return static_cast<std::size_t>(next_uniform() * static_cast<double>(bound));
}

RngState derive_stream(std::uint64_t seed, std::uint64_t stream_id) {
  RngState scrambler(seed ^ (0xA5A5A5A55A5A5A5AULL + stream_id * 0x9E3779B97F4A7C15ULL));
  return RngState(scrambler.next_u64());
}

}  // namespace adadecay
