#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace vision {

// Counter-based generator (Philox4x32-10). Every draw is a pure function of
// (seed, stream, index), so results do not depend on evaluation order or on
// how work is split across threads.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  std::array<std::uint32_t, 4> block(std::uint64_t index) const;

  // Uniform in [0, 1) with 53 random bits.
  double uniform(std::uint64_t index) const;

  // Standard normal samples; out[i] depends only on (seed, stream, i).
  void fill_gaussian(std::span<float> out) const;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
};

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

// Stream identifiers, namespaced so that different consumers never collide.
enum class RngDomain : std::uint32_t { kMask = 1, kSharedNoise = 2, kTest = 0xffff };

inline std::uint64_t make_stream(RngDomain domain, std::uint32_t sub) {
  return (static_cast<std::uint64_t>(domain) << 32) | sub;
}

}  // namespace vision
