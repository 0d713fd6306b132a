#pragma once

#include <cstdint>
#include <cmath>
#include <numbers>
#include <initializer_list>

namespace evoem {

// xoshiro256** (Blackman & Vigna): 256-bit state, seeded in a few
// nanoseconds, which matters because every (datapoint, iteration) pair gets
// its own stream. Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed = 0) noexcept {
    for (auto& w : s_) {
      seed += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = seed;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      w = z ^ (z >> 31);
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  friend bool operator==(const Xoshiro256&, const Xoshiro256&) = default;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

using Rng = Xoshiro256;

// Stream purposes; keep values stable, they are part of the reproducibility
// contract of checkpoints.
enum class StreamTag : std::uint64_t {
  kInitParams = 1,
  kInitStates = 2,
  kEvolve = 3,
  kSample = 4,
  kCorrupt = 5,
  kBars = 6,
};

// Derives an independent generator from the master seed and a tuple of
// stream coordinates (e.g. datapoint index, EM iteration). Results depend
// only on the arguments, never on scheduling.
inline Rng make_stream(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> coords = {}) {
  auto splitmix = [](std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  };
  std::uint64_t h = splitmix(seed ^ splitmix(static_cast<std::uint64_t>(tag)));
  for (std::uint64_t c : coords) h = splitmix(h ^ splitmix(c + 0x632be59bd9b4e019ULL));
  return Rng(h);
}

// Uniform double in [0, 1) from the top 53 bits; independent of the standard
// library's distribution implementation.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Uniform integer in [0, n) by rejection (n > 0).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Box-Muller on two uniform01 draws; the value depends only on the stream,
// never on the standard library's distribution implementation.
inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace evoem
